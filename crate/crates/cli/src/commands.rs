use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use erule::backtest::{case_study_report, CaseStudyEntry, Check, RecessionCalendar, SignalRule};
use erule::indicators::{compare_sahm, sahm_rule};
use erule::ingest::{self, HttpTransport, SourceConfig};
use erule::ml::{self, DatasetConfig, ModelConfig, ModelKind, SuiteReport};
use erule::signal::{classify_series, Band, PhaseThresholds};
use erule::simulation::{self, ScenarioParams};
use erule::{Composition, MonthDate};
use serde_json::{json, Value};

use crate::args::{CalendarArg, Command, GlobalArgs, DEFAULT_BAND, DEFAULT_SEED};
use crate::report::{num, opt, tag, Outcome, RunReport, Table, SCHEMA_VERSION};
use crate::CliError;

/// Calendar file looked for in the data directory before falling back to the
/// built-in copy.
const CALENDAR_FILE: &str = "nber_recessions.csv";
/// The two half-widths with published accuracies.
const DEFAULT_SIM_BANDS: [f64; 2] = [0.2, 0.3];
/// Below this many recession months in the test split, test metrics swing on
/// a single month.
const THIN_TEST_POSITIVES: u64 = 10;

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Resolved global flags.
struct Ctx {
    source: SourceConfig,
    /// False when the data dir fell through to the bundled fixtures.
    data_dir_chosen: bool,
    band: f64,
    band_flag: Option<f64>,
    seed_flag: Option<u64>,
    composition_flag: Option<Composition>,
    echo: BTreeMap<String, Value>,
    warnings: Vec<String>,
}

impl Ctx {
    fn new(g: &GlobalArgs) -> Result<Self> {
        let band = g.band.unwrap_or(DEFAULT_BAND);
        if !band.is_finite() || band < 0.0 {
            return Err(usage(format!(
                "--band must be a finite half-width >= 0, got {band}"
            )));
        }
        let source = match &g.data_dir {
            Some(dir) => SourceConfig::new(dir),
            None => SourceConfig::default().with_env_override(),
        }
        .offline(g.offline);
        let data_dir_chosen = source.data_dir != ingest::bundled_data_dir();
        let mut echo = BTreeMap::new();
        echo.insert("band".into(), json!(band));
        echo.insert(
            "composition".into(),
            json!(g.composition.unwrap_or_default()),
        );
        echo.insert(
            "data_dir".into(),
            json!(source.data_dir.display().to_string()),
        );
        echo.insert("offline".into(), json!(g.offline));
        echo.insert("seed".into(), json!(g.seed.unwrap_or(DEFAULT_SEED)));
        Ok(Self {
            source,
            data_dir_chosen,
            band,
            band_flag: g.band,
            seed_flag: g.seed,
            composition_flag: g.composition,
            echo,
            warnings: Vec::new(),
        })
    }

    fn composition(&self) -> Composition {
        self.composition_flag.unwrap_or_default()
    }

    fn seed(&self) -> u64 {
        self.seed_flag.unwrap_or(DEFAULT_SEED)
    }

    fn set(&mut self, key: &str, v: Value) {
        self.echo.insert(key.to_string(), v);
    }

    fn bundle(&self) -> Result<erule::Bundle> {
        Ok(ingest::load_bundle(&self.source, self.composition())?)
    }

    fn calendar(&mut self, arg: &CalendarArg) -> Result<RecessionCalendar> {
        let in_data_dir = self.source.data_dir.join(CALENDAR_FILE);
        let (cal, origin) = match &arg.calendar {
            Some(p) => (ingest::load_calendar(p)?, p.display().to_string()),
            None if in_data_dir.is_file() => (
                ingest::load_calendar(&in_data_dir)?,
                in_data_dir.display().to_string(),
            ),
            None => (RecessionCalendar::bundled(), "built-in".to_string()),
        };
        self.set("calendar", json!(origin));
        Ok(cal)
    }

    fn finish(self, command: &'static str, payload: Value, table: Table) -> Outcome {
        Outcome {
            report: RunReport {
                schema_version: SCHEMA_VERSION,
                command,
                config_echo: self.echo,
                payload,
                warnings: self.warnings,
            },
            table,
        }
    }
}

pub fn run(global: &GlobalArgs, command: &Command) -> Result<Outcome> {
    let mut ctx = Ctx::new(global)?;
    let name = command.name();
    let (payload, table) = match command {
        Command::Compute { from, to } => compute(&mut ctx, *from, *to)?,
        Command::Backtest {
            max_lead,
            signal,
            calendar,
        } => backtest(&mut ctx, *max_lead, *signal, calendar)?,
        Command::Simulate {
            n,
            bands,
            params,
            scenarios_out,
        } => simulate(
            &mut ctx,
            *n,
            bands.as_deref(),
            params.as_deref(),
            scenarios_out.as_deref(),
        )?,
        Command::Ml {
            models,
            threshold,
            train_frac,
            lags,
            horizon,
            include_components,
            save_models,
            calendar,
        } => {
            let opts = MlOpts {
                models: models.as_deref(),
                threshold: *threshold,
                train_frac: *train_frac,
                dataset: DatasetConfig {
                    lags: *lags,
                    horizon: *horizon,
                    include_components: *include_components,
                },
                save_models: save_models.as_deref(),
            };
            ml_suite(&mut ctx, opts, calendar)?
        }
        Command::Fetch { ids } => fetch(&mut ctx, ids)?,
        Command::CompareSahm { tolerance } => compare(&mut ctx, *tolerance)?,
    };
    Ok(ctx.finish(name, payload, table))
}

fn compute(
    ctx: &mut Ctx,
    from: Option<MonthDate>,
    to: Option<MonthDate>,
) -> Result<(Value, Table)> {
    if let (Some(f), Some(t)) = (from, to) {
        if f > t {
            return Err(usage(format!("--from {f} is after --to {t}")));
        }
    }
    ctx.set("from", json!(from));
    ctx.set("to", json!(to));
    let bundle = ctx.bundle()?;
    // Phases come from the full history so the first month of a window still
    // sees its predecessor.
    let phases: BTreeMap<_, _> =
        classify_series(&bundle.spread, &bundle.sahm, &PhaseThresholds::default())
            .into_iter()
            .collect();
    let view = bundle.slice(from, to);

    let mut table = Table::new(&["date", "spread", "sahm", "e_rule", "phase"]);
    let mut records = Vec::with_capacity(view.len());
    for ((&(date, e), spread), sahm) in view
        .e_rule
        .points()
        .iter()
        .zip(view.spread.values())
        .zip(view.sahm.values())
    {
        let phase = phases[&date];
        table.push(vec![
            date.to_string(),
            num(spread),
            num(sahm),
            num(e),
            phase.as_str().to_string(),
        ]);
        records.push(json!({
            "date": date,
            "spread": spread,
            "sahm": sahm,
            "e_rule": e,
            "phase": phase,
        }));
    }
    if records.is_empty() {
        let range = |d: Option<MonthDate>| d.map_or("open".to_string(), |d| d.to_string());
        ctx.warnings.push(format!(
            "no data between {} and {}; available {}..{}",
            range(from),
            range(to),
            range(bundle.e_rule.first_date()),
            range(bundle.e_rule.last_date()),
        ));
    }
    Ok((Value::Array(records), table))
}

fn backtest(
    ctx: &mut Ctx,
    max_lead: i64,
    rule: SignalRule,
    calendar: &CalendarArg,
) -> Result<(Value, Table)> {
    if max_lead < rule.min_lead() {
        return Err(usage(format!(
            "--max-lead must be at least {} for {rule}",
            rule.min_lead()
        )));
    }
    ctx.set("max_lead", json!(max_lead));
    ctx.set("signal", json!(rule));
    let band = Band::symmetric(ctx.band).map_err(|e| usage(e.to_string()))?;
    let cal = ctx.calendar(calendar)?;
    let bundle = ctx.bundle()?;
    if ctx.composition() != Composition::Difference {
        ctx.warnings
            .push("published case values refer to the difference composition; value checks will not line up".into());
    }
    let report = case_study_report(&bundle, &cal, &band, rule, max_lead)?;

    let mut table = Table::new(&[
        "label",
        "recession_start",
        "recession_end",
        "status",
        "signal_date",
        "signal_value",
        "lead_months",
        "cited_trigger",
        "cited_value",
        "e_rule_at_trigger",
        "value_check",
        "cited_lead",
        "lead_check",
    ]);
    for e in &report.entries {
        let sig = e.matched.matched_signal;
        table.push(vec![
            e.label.clone(),
            e.recession_start.to_string(),
            e.recession_end.to_string(),
            tag(&e.matched.status),
            sig.map(|s| s.date.to_string()).unwrap_or_default(),
            opt(sig.map(|s| s.value)),
            e.matched
                .lead_months
                .map(|l| l.to_string())
                .unwrap_or_default(),
            e.cited_trigger.map(|d| d.to_string()).unwrap_or_default(),
            opt(e.cited_value),
            opt(e.e_rule_at_trigger),
            tag(&e.value_check),
            e.cited_lead.map(|l| l.to_string()).unwrap_or_default(),
            tag(&e.lead_check),
        ]);
    }
    let tally = |pick: fn(&CaseStudyEntry) -> Check, want: Check| {
        report.entries.iter().filter(|e| pick(e) == want).count()
    };
    let summary = json!({
        "recessions": report.entries.len(),
        "matched": report.entries.iter().filter(|e| e.matched.matched_signal.is_some()).count(),
        "value_pass": tally(|e| e.value_check, Check::Pass),
        "value_fail": tally(|e| e.value_check, Check::Fail),
        "lead_pass": tally(|e| e.lead_check, Check::Pass),
        "lead_fail": tally(|e| e.lead_check, Check::Fail),
    });
    let mut payload = serde_json::to_value(&report).map_err(serialization)?;
    payload["summary"] = summary;
    Ok((payload, table))
}

fn simulate(
    ctx: &mut Ctx,
    n: usize,
    bands: Option<&[f64]>,
    params_path: Option<&Path>,
    scenarios_out: Option<&Path>,
) -> Result<(Value, Table)> {
    if n == 0 {
        return Err(usage("--n must be positive"));
    }
    let mut params = match params_path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            ScenarioParams::from_toml(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => ScenarioParams::default(),
    };
    if let Some(seed) = ctx.seed_flag {
        params.seed = seed;
    }
    if let Some(c) = ctx.composition_flag {
        params.composition = c;
    }
    params.validate().map_err(|e| usage(e.to_string()))?;

    let mut widths: Vec<f64> = match (bands, ctx.band_flag) {
        (Some(b), _) => b.to_vec(),
        (None, Some(w)) => vec![w],
        (None, None) => DEFAULT_SIM_BANDS.to_vec(),
    };
    if widths.is_empty() || widths.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(usage("--bands must be finite half-widths >= 0"));
    }
    widths.sort_by(f64::total_cmp);
    widths.dedup();
    ctx.set("seed", json!(params.seed));
    ctx.set("composition", json!(params.composition));
    ctx.set("n", json!(n));
    ctx.set("bands", json!(widths));
    ctx.set(
        "params_file",
        json!(params_path.map(|p| p.display().to_string())),
    );

    let scenarios = simulation::generate_scenarios::<f64>(&params, n)?;
    let sweep = simulation::sweep_bands(&scenarios, &widths)?;
    if let Some(path) = scenarios_out {
        let file = fs::File::create(path).map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        })?;
        simulation::write_scenarios_csv(&scenarios, BufWriter::new(file))?;
    }

    let mut table = Table::new(&[
        "half_width",
        "tp",
        "fp",
        "fn",
        "tn",
        "accuracy",
        "precision",
        "recall",
    ]);
    for r in &sweep.rows {
        let c = r.confusion;
        table.push(vec![
            num(r.half_width),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.tn.to_string(),
            opt(c.accuracy()),
            opt(c.precision()),
            opt(c.recall()),
        ]);
    }
    let payload = json!({
        "params": params,
        "n": n,
        "recessions": params.recession_count(n),
        "rows": sweep.rows,
        "best_half_width": sweep.best_half_width,
    });
    Ok((payload, table))
}

struct MlOpts<'a> {
    models: Option<&'a [ModelKind]>,
    threshold: f64,
    train_frac: f64,
    dataset: DatasetConfig,
    save_models: Option<&'a Path>,
}

fn ml_suite(ctx: &mut Ctx, opts: MlOpts<'_>, calendar: &CalendarArg) -> Result<(Value, Table)> {
    if !(0.0..=1.0).contains(&opts.threshold) {
        return Err(usage("--threshold must lie in [0, 1]"));
    }
    if !(opts.train_frac > 0.0 && opts.train_frac < 1.0) {
        return Err(usage("--train-frac must lie strictly between 0 and 1"));
    }
    if opts.dataset.lags == 0 {
        return Err(usage("--lags must be at least 1"));
    }
    let mut kinds: Vec<ModelKind> = Vec::new();
    for k in opts.models.unwrap_or(&ModelKind::ALL) {
        if !kinds.contains(k) {
            kinds.push(*k);
        }
    }
    let seed = ctx.seed();
    let configs: Vec<ModelConfig> = kinds
        .iter()
        .map(|&k| match ModelConfig::default_for(k) {
            ModelConfig::RandomForest(mut f) => {
                f.seed = seed;
                ModelConfig::RandomForest(f)
            }
            other => other,
        })
        .collect();
    ctx.set("models", json!(configs));
    ctx.set("threshold", json!(opts.threshold));
    ctx.set("train_frac", json!(opts.train_frac));
    ctx.set("dataset", json!(opts.dataset));

    let cal = ctx.calendar(calendar)?;
    let bundle = ctx.bundle()?;
    let ds = ml::build_dataset_with(&bundle, &cal, opts.dataset)?;
    let mut suite: SuiteReport = ml::run_suite(
        &ds,
        opts.train_frac,
        &configs,
        opts.threshold,
        opts.save_models.is_some(),
    )?;

    let mut saved = Vec::new();
    if let Some(dir) = opts.save_models {
        let out_err = |source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(out_err)?;
        for row in &mut suite.rows {
            if let Some(model) = row.fitted.take() {
                let file = format!("{}.json", row.model.as_str());
                let path: PathBuf = dir.join(&file);
                fs::write(&path, model.to_json()?)
                    .map_err(|source| CliError::Output { path, source })?;
                saved.push(file);
            }
        }
    }

    let test_pos = suite
        .rows
        .first()
        .map(|r| r.test.confusion.tp + r.test.confusion.fn_);
    if let Some(p) = test_pos.filter(|p| *p < THIN_TEST_POSITIVES) {
        ctx.warnings.push(format!(
            "test split holds only {p} recession months out of {}; test metrics move in large steps",
            suite.test_rows
        ));
    }
    for row in &suite.rows {
        for (split, m) in [("train", &row.train), ("test", &row.test)] {
            if m.precision_recession.is_none() {
                ctx.warnings.push(format!(
                    "{} {split}: precision undefined, no month scored at or above {}",
                    row.model.as_str(),
                    opts.threshold
                ));
            }
        }
    }

    let mut table = Table::new(&[
        "split",
        "model",
        "rows",
        "accuracy",
        "precision_recession",
        "recall_recession",
        "auc",
        "tp",
        "fp",
        "fn",
        "tn",
    ]);
    for split in ["train", "test"] {
        for row in &suite.rows {
            let m = if split == "train" {
                &row.train
            } else {
                &row.test
            };
            let c = m.confusion;
            table.push(vec![
                split.to_string(),
                row.model.as_str().to_string(),
                m.rows.to_string(),
                opt(m.accuracy),
                opt(m.precision_recession),
                opt(m.recall_recession),
                opt(m.auc),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                c.tn.to_string(),
            ]);
        }
    }
    let mut payload = serde_json::to_value(&suite).map_err(serialization)?;
    payload["dataset"] = json!({
        "rows": ds.len(),
        "positives": ds.positives(),
        "features": ds.feature_names(),
        "first": ds.dates().first(),
        "last": ds.dates().last(),
    });
    payload["saved_models"] = json!(saved);
    Ok((payload, table))
}

fn fetch(ctx: &mut Ctx, ids: &[String]) -> Result<(Value, Table)> {
    if ctx.source.offline_only {
        return Err(usage(
            "fetch downloads from FRED and cannot run with --offline",
        ));
    }
    if !ctx.data_dir_chosen {
        return Err(usage(
            "fetch needs --data-dir or E_RULE_DATA_DIR; it will not overwrite the bundled fixtures",
        ));
    }
    if let Some(bad) = ids
        .iter()
        .find(|id| id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
    {
        return Err(usage(format!("`{bad}` is not a FRED series id")));
    }
    ctx.set("ids", json!(ids));
    let mut table = Table::new(&["id", "observations", "first", "last", "path"]);
    let mut rows = Vec::new();
    for id in ids {
        let raw = ingest::refresh_series_with(id, &ctx.source, &HttpTransport)?;
        let first = raw.observations.first().map(|o| o.0.to_string());
        let last = raw.observations.last().map(|o| o.0.to_string());
        let path = ctx.source.cache_path(id).display().to_string();
        table.push(vec![
            id.clone(),
            raw.observations.len().to_string(),
            first.clone().unwrap_or_default(),
            last.clone().unwrap_or_default(),
            path.clone(),
        ]);
        rows.push(json!({
            "id": id,
            "observations": raw.observations.len(),
            "first": first,
            "last": last,
            "path": path,
        }));
    }
    Ok((Value::Array(rows), table))
}

fn compare(ctx: &mut Ctx, tolerance: f64) -> Result<(Value, Table)> {
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(usage("--tolerance must be finite and >= 0"));
    }
    ctx.set("tolerance", json!(tolerance));
    let u = ingest::load_series::<f64>("UNRATE", &ctx.source)?;
    let published = ingest::load_series::<f64>("SAHMREALTIME", &ctx.source)?;
    let cmp = compare_sahm(&sahm_rule(&u)?, &published, tolerance);
    if cmp.overlap_months == 0 {
        ctx.warnings
            .push("UNRATE-derived and published Sahm series share no months".into());
    }
    let mut table = Table::new(&[
        "overlap_months",
        "within_tolerance",
        "fraction_within",
        "tolerance",
        "max_abs_diff",
        "mean_abs_diff",
    ]);
    table.push(vec![
        cmp.overlap_months.to_string(),
        cmp.within_tolerance.to_string(),
        num(cmp.fraction_within()),
        num(cmp.tolerance),
        num(cmp.max_abs_diff),
        num(cmp.mean_abs_diff),
    ]);
    let mut payload = serde_json::to_value(&cmp).map_err(serialization)?;
    payload["fraction_within"] = json!(cmp.fraction_within());
    Ok((payload, table))
}

fn serialization(e: serde_json::Error) -> CliError {
    CliError::Core(erule::Error::Serialization(e.to_string()))
}
