//! FRED CSV parsing, daily-to-monthly aggregation, the on-disk series cache
//! and the recession calendar file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::backtest::{RecessionCalendar, RecessionInterval};
use crate::error::{Error, Result};
use crate::indicators::{build_bundle, Composition, IndicatorBundle};
use crate::scalar::Scalar;
use crate::series::{MonthDate, MonthlySeries, Unit};

pub const DATA_DIR_ENV: &str = "E_RULE_DATA_DIR";
pub const DEFAULT_ENDPOINT: &str = "https://fred.stlouisfed.org/graph/fredgraph.csv?id={series_id}";

/// Directory holding the fixtures shipped with this crate.
pub fn bundled_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

/// A series exactly as exported, one observation per row. `None` is FRED's
/// `.` missing marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub series_id: String,
    pub observations: Vec<(NaiveDate, Option<f64>)>,
}

pub fn parse_fred_csv(text: &str) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::Format(e.to_string()))?,
        None => return Err(Error::Format("empty input, expected a header line".into())),
    };
    if header.len() != 2 || NaiveDate::parse_from_str(header[0].trim(), "%Y-%m-%d").is_ok() {
        return Err(Error::Format(
            "expected a two-column header such as `DATE,<SERIES_ID>`".into(),
        ));
    }
    let series_id = header[1].trim().to_string();

    let mut observations: Vec<(NaiveDate, Option<f64>)> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let date =
            NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d").map_err(|e| Error::Parse {
                line,
                message: format!("bad date `{}`: {e}", rec[0].trim()),
            })?;
        let raw = rec[1].trim();
        let value = if raw == "." {
            None
        } else {
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad value `{raw}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value `{raw}`"),
                });
            }
            Some(v)
        };
        if observations.last().is_some_and(|(d, _)| *d >= date) {
            return Err(Error::Parse {
                line,
                message: format!("date {date} is not after the previous row"),
            });
        }
        observations.push((date, value));
    }
    Ok(RawSeries {
        series_id,
        observations,
    })
}

/// Inverse of [`parse_fred_csv`].
pub fn to_fred_csv(raw: &RawSeries) -> String {
    let mut out = format!("DATE,{}\n", raw.series_id);
    for (d, v) in &raw.observations {
        match v {
            Some(v) => writeln!(out, "{},{v}", d.format("%Y-%m-%d")),
            None => writeln!(out, "{},.", d.format("%Y-%m-%d")),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Mean,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesRule {
    pub id: &'static str,
    pub aggregator: Aggregator,
    pub unit: Unit,
}

/// How each known series becomes monthly. Daily series are averaged; series
/// that are already monthly pass through via `Last`.
pub const SERIES_RULES: &[SeriesRule] = &[
    SeriesRule {
        id: "T10Y2Y",
        aggregator: Aggregator::Mean,
        unit: Unit::PercentagePoints,
    },
    SeriesRule {
        id: "DGS10",
        aggregator: Aggregator::Mean,
        unit: Unit::Percent,
    },
    SeriesRule {
        id: "DGS2",
        aggregator: Aggregator::Mean,
        unit: Unit::Percent,
    },
    SeriesRule {
        id: "GS10",
        aggregator: Aggregator::Last,
        unit: Unit::Percent,
    },
    SeriesRule {
        id: "GS2",
        aggregator: Aggregator::Last,
        unit: Unit::Percent,
    },
    SeriesRule {
        id: "UNRATE",
        aggregator: Aggregator::Last,
        unit: Unit::Percent,
    },
    SeriesRule {
        id: "SAHMREALTIME",
        aggregator: Aggregator::Last,
        unit: Unit::PercentagePoints,
    },
];

/// Unknown ids default to monthly mean in percent.
pub fn rule_for(id: &str) -> SeriesRule {
    SERIES_RULES
        .iter()
        .copied()
        .find(|r| r.id.eq_ignore_ascii_case(id))
        .unwrap_or(SeriesRule {
            id: "",
            aggregator: Aggregator::Mean,
            unit: Unit::Percent,
        })
}

pub fn to_monthly<T: Scalar>(raw: &RawSeries, aggregator: Aggregator) -> MonthlySeries<T> {
    let mut points: Vec<(MonthDate, T)> = Vec::new();
    let mut current: Option<(MonthDate, f64, usize, f64)> = None;
    let flush = |acc: Option<(MonthDate, f64, usize, f64)>, points: &mut Vec<(MonthDate, T)>| {
        if let Some((m, sum, n, last)) = acc {
            let v = match aggregator {
                Aggregator::Mean => sum / n as f64,
                Aggregator::Last => last,
            };
            points.push((m, T::lit(v)));
        }
    };
    for (d, v) in &raw.observations {
        let Some(v) = *v else { continue };
        let m = MonthDate::ym(d.year(), d.month());
        match current.as_mut() {
            Some((cm, sum, n, last)) if *cm == m => {
                *sum += v;
                *n += 1;
                *last = v;
            }
            _ => {
                flush(current.take(), &mut points);
                current = Some((m, v, 1, v));
            }
        }
    }
    flush(current, &mut points);
    MonthlySeries::new(raw.series_id.clone(), rule_for(&raw.series_id).unit, points)
        .expect("aggregated months are increasing and finite")
}

/// Fetches raw bytes for a URL.
pub trait Transport {
    fn fetch(&self, url: &str) -> std::result::Result<Vec<u8>, String>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn fetch(&self, url: &str) -> std::result::Result<Vec<u8>, String> {
        let resp = reqwest::blocking::get(url).map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        resp.bytes().map(|b| b.to_vec()).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub data_dir: PathBuf,
    pub offline_only: bool,
    pub endpoint_template: String,
}

impl SourceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            offline_only: false,
            endpoint_template: DEFAULT_ENDPOINT.to_string(),
        }
    }

    pub fn offline(mut self, offline_only: bool) -> Self {
        self.offline_only = offline_only;
        self
    }

    /// `E_RULE_DATA_DIR`, when set and non-empty, replaces `data_dir`.
    pub fn with_env_override(mut self) -> Self {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()) {
            self.data_dir = PathBuf::from(dir);
        }
        self
    }

    pub fn cache_path(&self, id: &str) -> PathBuf {
        self.data_dir.join(format!("{id}.csv"))
    }

    pub fn url_for(&self, id: &str) -> String {
        self.endpoint_template.replace("{series_id}", id)
    }
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self::new(bundled_data_dir())
    }
}

pub fn load_series<T: Scalar>(id: &str, cfg: &SourceConfig) -> Result<MonthlySeries<T>> {
    load_series_with(id, cfg, &HttpTransport)
}

/// Cache first; on a miss (and when allowed) fetch, store the response bytes
/// verbatim, then parse the stored copy.
pub fn load_series_with<T: Scalar>(
    id: &str,
    cfg: &SourceConfig,
    transport: &dyn Transport,
) -> Result<MonthlySeries<T>> {
    let path = cfg.cache_path(id);
    let bytes = if path.is_file() {
        std::fs::read(&path)?
    } else if cfg.offline_only {
        return Err(Error::NotFound {
            id: id.to_string(),
            dir: cfg.data_dir.clone(),
        });
    } else {
        let body = transport
            .fetch(&cfg.url_for(id))
            .map_err(|message| Error::Transport {
                id: id.to_string(),
                message,
            })?;
        write_atomic(&path, &body)?;
        body
    };
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Format(format!("{} is not valid UTF-8", path.display())))?;
    let raw = parse_fred_csv(&text)?;
    Ok(to_monthly(&raw, rule_for(id).aggregator))
}

/// Download `id` regardless of the cache. The body must parse before it
/// replaces the cached copy, so a bad response never clobbers good data.
pub fn refresh_series_with(
    id: &str,
    cfg: &SourceConfig,
    transport: &dyn Transport,
) -> Result<RawSeries> {
    let body = transport
        .fetch(&cfg.url_for(id))
        .map_err(|message| Error::Transport {
            id: id.to_string(),
            message,
        })?;
    let text = String::from_utf8(body)
        .map_err(|_| Error::Format(format!("response for {id} is not valid UTF-8")))?;
    let raw = parse_fred_csv(&text)?;
    write_atomic(&cfg.cache_path(id), text.as_bytes())?;
    Ok(raw)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Load UNRATE, GS10 and GS2 and build the indicator bundle.
pub fn load_bundle<T: Scalar>(
    cfg: &SourceConfig,
    composition: Composition,
) -> Result<IndicatorBundle<T>> {
    let u = load_series::<T>("UNRATE", cfg)?;
    let t10 = load_series::<T>("GS10", cfg)?;
    let t2 = load_series::<T>("GS2", cfg)?;
    build_bundle(&u, &t10, &t2, composition)
}

pub fn parse_calendar_csv(text: &str) -> Result<RecessionCalendar> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "start" || &headers[1] != "end" {
        return Err(Error::Format("calendar header must be `start,end`".into()));
    }
    let mut intervals = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |s: &str| {
            s.parse::<MonthDate>().map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })
        };
        intervals.push(RecessionInterval {
            start: parse(&rec[0])?,
            end: parse(&rec[1])?,
        });
    }
    RecessionCalendar::new(intervals)
}

pub fn load_calendar(path: &Path) -> Result<RecessionCalendar> {
    parse_calendar_csv(&std::fs::read_to_string(path)?)
}
