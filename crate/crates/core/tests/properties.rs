//! Property tests for the invariants of each module. Oracles here are written
//! independently of the library code.

use chrono::NaiveDate;
use erule::backtest::{match_lead_times, RecessionCalendar, RecessionInterval};
use erule::indicators::sahm_rule;
use erule::ingest::{parse_fred_csv, to_fred_csv, to_monthly, Aggregator, RawSeries};
use erule::ml::{auc, auc_pairwise, logistic_gradient, logistic_loss, ModelConfig, ModelKind};
use erule::series::{rolling_mean, MonthlySeries};
use erule::signal::{classify_phase, detect_signals, Band, Phase, SignalEvent, SignalKind};
use erule::simulation::{evaluate_band, generate_scenarios, ConfusionMatrix, ScenarioParams};
use erule::{MonthDate, Unit};
use num_rational::Ratio;
use proptest::prelude::*;

fn monthly(vals: &[f64]) -> MonthlySeries<f64> {
    MonthlySeries::from_values(
        "X",
        Unit::Percent,
        MonthDate::ym(1990, 1),
        vals.iter().copied(),
    )
    .unwrap()
}

fn sahm_oracle(u: &[f64]) -> Vec<f64> {
    let avg: Vec<f64> = (2..u.len())
        .map(|i| (u[i] + u[i - 1] + u[i - 2]) / 3.0)
        .collect();
    (12..avg.len())
        .map(|i| {
            let low = avg[i - 12..i].iter().copied().fold(f64::INFINITY, f64::min);
            avg[i] - low
        })
        .collect()
}

proptest! {
    #[test]
    fn sahm_matches_direct_formula(u in prop::collection::vec(3.0f64..12.0, 15..60)) {
        let got: Vec<f64> = sahm_rule(&monthly(&u)).unwrap().values().collect();
        let want = sahm_oracle(&u);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn rolling_mean_length(vals in prop::collection::vec(-5.0f64..5.0, 0..40), w in 1usize..6) {
        let out = rolling_mean(&monthly(&vals), w).unwrap();
        prop_assert_eq!(out.len(), vals.len().saturating_sub(w - 1));
    }

    #[test]
    fn no_event_in_first_month(vals in prop::collection::vec(-1.0f64..1.0, 1..30), hw in 0.0f64..0.5) {
        let s = monthly(&vals);
        let first = s.first_date().unwrap();
        prop_assert!(detect_signals(&s, &Band::symmetric(hw).unwrap()).iter().all(|e| e.date != first));
    }

    #[test]
    fn raising_hi_only_adds_entries(
        vals in prop::collection::vec(-1.0f64..1.0, 2..40),
        lo in -0.5f64..0.0,
        hi in 0.0f64..0.5,
        extra in 0.0f64..0.5,
    ) {
        let s = monthly(&vals);
        let entries = |b: Band| -> Vec<MonthDate> {
            detect_signals(&s, &b)
                .into_iter()
                .filter(|e| e.kind == SignalKind::BandEntryFromBelow)
                .map(|e| e.date)
                .collect()
        };
        let narrow = entries(Band::new(lo, hi).unwrap());
        let wide = entries(Band::new(lo, hi + extra).unwrap());
        prop_assert!(narrow.iter().all(|d| wide.contains(d)));
    }

    #[test]
    fn phase_is_total(spread in -3.0f64..3.0, sahm in -0.5f64..3.0, prev in -0.5f64..3.0) {
        let p = classify_phase(spread, sahm, prev);
        let expected = if spread < 0.0 && sahm < 0.1 {
            Phase::EarlyWarning
        } else if spread < 0.0 && sahm < 0.5 {
            Phase::CracksAppear
        } else if spread < 0.0 {
            Phase::RecessionConfirmed
        } else if sahm >= 0.5 && sahm <= prev {
            Phase::Recovery
        } else {
            Phase::Neutral
        };
        prop_assert_eq!(p, expected);
    }

    #[test]
    fn one_report_per_recession_and_leads_in_window(
        offsets in prop::collection::vec(0i64..400, 0..20),
        max_lead in 1i64..30,
    ) {
        let cal = RecessionCalendar::bundled();
        let events: Vec<SignalEvent> = offsets
            .iter()
            .map(|&o| SignalEvent {
                date: MonthDate::ym(1978, 1).add_months(o),
                value: 0.0,
                kind: SignalKind::BandEntryFromBelow,
            })
            .collect();
        let r = match_lead_times(&events, &cal, max_lead).unwrap();
        prop_assert_eq!(r.len(), cal.len());
        let mut used = Vec::new();
        for rep in &r {
            if let (Some(l), Some(s)) = (rep.lead_months, rep.matched_signal) {
                prop_assert!((0..=max_lead).contains(&l));
                used.push(s.date);
            }
        }
        // reversed input order gives the same (recession, lead) pairs
        let mut rev = events.clone();
        rev.reverse();
        let r2 = match_lead_times(&rev, &cal, max_lead).unwrap();
        let leads = |r: &[erule::LeadLag]| r.iter().map(|x| (x.recession_start, x.lead_months)).collect::<Vec<_>>();
        prop_assert_eq!(leads(&r), leads(&r2));
    }

    #[test]
    fn fred_csv_round_trip(
        start in 0i64..20000,
        steps in prop::collection::vec((1i64..40, prop::option::of(-50.0f64..50.0)), 0..60),
    ) {
        let mut day = NaiveDate::from_ymd_opt(1960, 1, 1).unwrap() + chrono::Days::new(start as u64);
        let mut observations = Vec::new();
        for (gap, v) in steps {
            day = day + chrono::Days::new(gap as u64);
            observations.push((day, v));
        }
        let raw = RawSeries { series_id: "T10Y2Y".into(), observations };
        prop_assert_eq!(parse_fred_csv(&to_fred_csv(&raw)).unwrap(), raw);
    }

    #[test]
    fn monthly_points_are_sorted_and_backed(
        steps in prop::collection::vec((1u64..20, prop::option::of(-5.0f64..5.0)), 0..120),
        mean in any::<bool>(),
    ) {
        let mut day = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let mut observations = Vec::new();
        for (gap, v) in steps {
            day = day + chrono::Days::new(gap);
            observations.push((day, v));
        }
        let raw = RawSeries { series_id: "DGS10".into(), observations };
        let agg = if mean { Aggregator::Mean } else { Aggregator::Last };
        let m = to_monthly::<f64>(&raw, agg);
        prop_assert!(m.points().windows(2).all(|w| w[0].0 < w[1].0));
        for &(d, _) in m.points() {
            let backed = raw.observations.iter().any(|(od, v)| {
                v.is_some() && MonthDate::new(chrono::Datelike::year(od), chrono::Datelike::month(od)).unwrap() == d
            });
            prop_assert!(backed);
        }
    }

    #[test]
    fn confusion_counts_are_conserved(n in 1usize..80, frac in 0.0f64..=1.0, seed in any::<u64>(), hw in 0.0f64..0.5) {
        let p = ScenarioParams { recession_fraction: frac, seed, ..ScenarioParams::default() };
        let s = generate_scenarios::<f64>(&p, n).unwrap();
        prop_assert_eq!(s.iter().filter(|x| x.truth).count(), (n as f64 * frac).round() as usize);
        let cm = evaluate_band(&s, &Band::symmetric(hw).unwrap());
        prop_assert_eq!(cm.total() as usize, n);
    }

    #[test]
    fn exact_metrics_agree(tp in 0u64..5000, fp in 0u64..5000, fn_ in 0u64..5000, tn in 0u64..5000) {
        let cm = ConfusionMatrix { tp, fp, fn_, tn };
        let to_f = |r: Option<Ratio<u64>>| r.map(|r| *r.numer() as f64 / *r.denom() as f64);
        prop_assert_eq!(to_f(cm.accuracy_exact()), cm.accuracy());
        prop_assert_eq!(to_f(cm.precision_exact()), cm.precision());
        prop_assert_eq!(to_f(cm.recall_exact()), cm.recall());
        if tp + fp + fn_ + tn > 0 {
            prop_assert_eq!(cm.accuracy_exact().unwrap() * Ratio::from_integer(tp + fp + fn_ + tn), Ratio::from_integer(tp + tn));
        }
    }

    #[test]
    fn rank_auc_equals_pairwise(
        pts in prop::collection::vec((0u8..15, any::<bool>()), 2..200),
    ) {
        let scores: Vec<f64> = pts.iter().map(|(s, _)| *s as f64 / 7.0).collect();
        let labels: Vec<bool> = pts.iter().map(|(_, y)| *y).collect();
        match (auc(&scores, &labels), auc_pairwise(&scores, &labels)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}

fn dataset_strategy() -> impl Strategy<Value = erule::Dataset> {
    (2usize..30, 1usize..4).prop_flat_map(|(rows, cols)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, cols), rows),
            prop::collection::vec(any::<bool>(), rows),
            Just(cols),
        )
            .prop_map(|(features, mut labels, cols)| {
                labels[0] = true;
                labels[1] = false;
                let n = labels.len();
                erule::Dataset::new(
                    features,
                    labels,
                    (0..n)
                        .map(|i| MonthDate::ym(2000, 1).add_months(i as i64))
                        .collect(),
                    (0..cols).map(|c| format!("x{c}")).collect(),
                )
                .unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn logistic_gradient_matches_finite_differences(
        ds in dataset_strategy(),
        w0 in prop::collection::vec(-1.0f64..1.0, 3),
        b in -1.0f64..1.0,
    ) {
        let w: Vec<f64> = w0[..ds.n_features()].to_vec();
        let l2 = 1e-3;
        let (gw, gb) = logistic_gradient(&ds, &w, b, l2);
        let h = 1e-5;
        for k in 0..=w.len() {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if k < w.len() { wp[k] += h; wm[k] -= h; } else { bp += h; bm -= h; }
            let num = (logistic_loss(&ds, &wp, bp, l2) - logistic_loss(&ds, &wm, bm, l2)) / (2.0 * h);
            let a = if k < w.len() { gw[k] } else { gb };
            prop_assert!((num - a).abs() / a.abs().max(1e-3) < 1e-5, "k={} num={} analytic={}", k, num, a);
        }
    }

    #[test]
    fn probabilities_stay_in_unit_interval(
        ds in dataset_strategy(),
        probes in prop::collection::vec(prop::collection::vec(-1e8f64..1e8, 3), 1..20),
    ) {
        let configs = [
            ModelConfig::Logreg(erule::ml::LogRegConfig { iters: 200, ..Default::default() }),
            ModelConfig::LinearSvm(erule::ml::SvmConfig { iters: 200, ..Default::default() }),
            ModelConfig::GradientBoosting(erule::ml::BoostConfig { n_rounds: 10, ..Default::default() }),
            ModelConfig::RandomForest(erule::ml::ForestConfig { n_trees: 10, ..Default::default() }),
        ];
        for cfg in configs {
            let m = cfg.train(&ds).unwrap();
            for x in &probes {
                let p = m.predict_proba(&x[..ds.n_features()]);
                prop_assert!((0.0..=1.0).contains(&p), "{:?} gave {}", cfg.kind(), p);
            }
        }
    }

    #[test]
    fn relabelled_dates_leave_metrics_unchanged(ds in dataset_strategy(), shift in -500i64..500) {
        let moved = ds.shift_dates(shift);
        for kind in [ModelKind::Logreg, ModelKind::RandomForest] {
            let cfg = match ModelConfig::default_for(kind) {
                ModelConfig::RandomForest(c) => ModelConfig::RandomForest(erule::ml::ForestConfig { n_trees: 10, ..c }),
                ModelConfig::Logreg(c) => ModelConfig::Logreg(erule::ml::LogRegConfig { iters: 200, ..c }),
                other => other,
            };
            let a = erule::ml::evaluate(&cfg.train(&ds).unwrap(), &ds, 0.5).unwrap();
            let b = erule::ml::evaluate(&cfg.train(&moved).unwrap(), &moved, 0.5).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn symmetric_widening_can_drop_an_entry() {
    let s = monthly(&[-0.25, 0.0]);
    let entries = |hw: f64| {
        detect_signals(&s, &Band::symmetric(hw).unwrap())
            .iter()
            .filter(|e| e.kind == SignalKind::BandEntryFromBelow)
            .count()
    };
    assert_eq!(entries(0.2), 1);
    assert_eq!(entries(0.3), 0);
}

#[test]
fn calendar_rejects_overlap() {
    let ym = MonthDate::ym;
    assert!(RecessionCalendar::new(vec![
        RecessionInterval {
            start: ym(2001, 3),
            end: ym(2001, 11)
        },
        RecessionInterval {
            start: ym(2001, 11),
            end: ym(2002, 2)
        },
    ])
    .is_err());
}
