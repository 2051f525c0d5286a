//! Matching recession signals to the official recession calendar and
//! reproducing the published case-study lead times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::IndicatorBundle;
use crate::scalar::Scalar;
use crate::series::MonthDate;
use crate::signal::{band_entries, in_band_months, Band, SignalEvent, SignalKind};

/// Default matching window, months.
pub const DEFAULT_MAX_LEAD: i64 = 24;
/// Tolerance on case-study E-Rule values.
pub const CASE_VALUE_TOLERANCE: f64 = 0.10;

/// Recession calendar shipped with the crate (peak and trough months).
pub const BUNDLED_CALENDAR_CSV: &str = include_str!("../data/nber_recessions.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecessionInterval {
    pub start: MonthDate,
    pub end: MonthDate,
}

impl RecessionInterval {
    pub fn contains(&self, d: MonthDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn months(&self) -> i64 {
        self.end.months_since(self.start) + 1
    }
}

/// Sorted, disjoint recession intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecessionCalendar {
    intervals: Vec<RecessionInterval>,
}

impl RecessionCalendar {
    pub fn new(intervals: Vec<RecessionInterval>) -> Result<Self> {
        for iv in &intervals {
            if iv.start > iv.end {
                return Err(Error::Calendar(format!(
                    "interval {}..{} ends before it starts",
                    iv.start, iv.end
                )));
            }
        }
        for pair in intervals.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(Error::Calendar(format!(
                    "interval starting {} is out of order or overlaps the one ending {}",
                    pair[1].start, pair[0].end
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn bundled() -> Self {
        crate::ingest::parse_calendar_csv(BUNDLED_CALENDAR_CSV).expect("bundled calendar is valid")
    }

    pub fn intervals(&self) -> &[RecessionInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, d: MonthDate) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.end < d);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(d))
    }
}

/// Which months count as a recession signal when matching to the calendar.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalRule {
    /// The last month inside the band strictly before the start. This is the
    /// reading under which the cited trigger months (July 1979, June 1990,
    /// February 2001, January 2020) fall out of the bundled data.
    #[default]
    LastInBand,
    /// The latest band entry from below at or before the start.
    BandEntry,
}

impl SignalRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalRule::LastInBand => "last-in-band",
            SignalRule::BandEntry => "band-entry",
        }
    }

    pub fn candidates<T: Scalar>(
        self,
        e: &crate::series::MonthlySeries<T>,
        band: &Band<T>,
    ) -> Vec<SignalEvent<T>> {
        match self {
            SignalRule::LastInBand => in_band_months(e, band),
            SignalRule::BandEntry => band_entries(e, band),
        }
    }

    /// Smallest admissible lead in months.
    pub fn min_lead(self) -> i64 {
        match self {
            SignalRule::LastInBand => 1,
            SignalRule::BandEntry => 0,
        }
    }
}

impl std::fmt::Display for SignalRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SignalRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "last-in-band" | "in-band" => Ok(SignalRule::LastInBand),
            "band-entry" | "entry" => Ok(SignalRule::BandEntry),
            other => Err(Error::InvalidArgument(format!(
                "unknown signal rule `{other}` (expected last-in-band|band-entry)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStatus {
    Matched,
    Missed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LeadLagReport<T = f64> {
    pub recession_start: MonthDate,
    pub matched_signal: Option<SignalEvent<T>>,
    /// Positive when the signal precedes the start.
    pub lead_months: Option<i64>,
    pub status: MatchStatus,
}

/// One report per recession: the latest unused band entry at or before the
/// start and no more than `max_lead` months earlier. Recessions are visited
/// earliest first and each event matches at most one of them.
pub fn match_lead_times<T: Scalar>(
    events: &[SignalEvent<T>],
    cal: &RecessionCalendar,
    max_lead: i64,
) -> Result<Vec<LeadLagReport<T>>> {
    let entries: Vec<SignalEvent<T>> = events
        .iter()
        .filter(|e| e.kind == SignalKind::BandEntryFromBelow)
        .copied()
        .collect();
    match_events(&entries, cal, 0, max_lead)
}

/// Greedy matching of arbitrary signal events: for each recession, earliest
/// first, the latest unused event whose lead lies in `min_lead..=max_lead`.
pub fn match_events<T: Scalar>(
    events: &[SignalEvent<T>],
    cal: &RecessionCalendar,
    min_lead: i64,
    max_lead: i64,
) -> Result<Vec<LeadLagReport<T>>> {
    if max_lead < 1 || min_lead < 0 || min_lead > max_lead {
        return Err(Error::InvalidArgument(
            "lead window must satisfy 0 <= min_lead <= max_lead and max_lead >= 1".into(),
        ));
    }
    let mut entries: Vec<(usize, &SignalEvent<T>)> = events.iter().enumerate().collect();
    entries.sort_by_key(|(i, e)| (e.date, *i));
    let mut used = vec![false; entries.len()];

    Ok(cal
        .intervals()
        .iter()
        .map(|iv| {
            let pick = entries
                .iter()
                .enumerate()
                .filter(|(k, (_, e))| {
                    let lead = iv.start.months_since(e.date);
                    !used[*k] && (min_lead..=max_lead).contains(&lead)
                })
                .max_by_key(|(k, (_, e))| (e.date, *k))
                .map(|(k, _)| k);
            match pick {
                Some(k) => {
                    used[k] = true;
                    let ev = *entries[k].1;
                    LeadLagReport {
                        recession_start: iv.start,
                        matched_signal: Some(ev),
                        lead_months: Some(iv.start.months_since(ev.date)),
                        status: MatchStatus::Matched,
                    }
                }
                None => LeadLagReport {
                    recession_start: iv.start,
                    matched_signal: None,
                    lead_months: None,
                    status: MatchStatus::Missed,
                },
            }
        })
        .collect())
}

/// A trigger month and value cited for one historical recession.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedCase {
    pub label: &'static str,
    pub recession_start: MonthDate,
    pub trigger: MonthDate,
    pub value: f64,
    pub lead_months: i64,
    /// `None` when the cited lead is not checked numerically.
    pub lead_tolerance: Option<i64>,
    pub note: Option<&'static str>,
}

pub const DUPLICATE_TRIGGER_NOTE: &str =
    "cited trigger (July 1979, -0.16) is identical to the 1980 \
entry and the cited 24-month lead does not follow from it; reported as measured";

pub fn published_cases() -> Vec<PublishedCase> {
    let ym = MonthDate::ym;
    vec![
        PublishedCase {
            label: "1980",
            recession_start: ym(1980, 1),
            trigger: ym(1979, 7),
            value: -0.16,
            lead_months: 6,
            lead_tolerance: Some(2),
            note: None,
        },
        PublishedCase {
            label: "1981-1982",
            recession_start: ym(1981, 7),
            trigger: ym(1979, 7),
            value: -0.16,
            lead_months: 24,
            lead_tolerance: None,
            note: Some(DUPLICATE_TRIGGER_NOTE),
        },
        PublishedCase {
            label: "1990-1991",
            recession_start: ym(1990, 7),
            trigger: ym(1990, 6),
            value: 0.10,
            lead_months: 1,
            lead_tolerance: Some(1),
            note: None,
        },
        PublishedCase {
            label: "2001",
            recession_start: ym(2001, 3),
            trigger: ym(2001, 2),
            value: 0.24,
            lead_months: 1,
            lead_tolerance: Some(1),
            note: None,
        },
        PublishedCase {
            label: "2008",
            recession_start: ym(2007, 12),
            trigger: ym(2007, 8),
            value: 0.26,
            lead_months: 4,
            lead_tolerance: Some(1),
            note: None,
        },
        PublishedCase {
            label: "2020",
            recession_start: ym(2020, 2),
            trigger: ym(2020, 1),
            value: 0.24,
            lead_months: 1,
            lead_tolerance: Some(1),
            note: None,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail,
    NotAsserted,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CaseStudyEntry<T = f64> {
    pub label: String,
    pub recession_start: MonthDate,
    pub recession_end: MonthDate,
    pub cited_trigger: Option<MonthDate>,
    pub cited_value: Option<f64>,
    pub e_rule_at_trigger: Option<T>,
    pub value_check: Check,
    pub matched: LeadLagReport<T>,
    pub cited_lead: Option<i64>,
    pub lead_check: Check,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CaseStudyReport<T = f64> {
    pub band: Band<T>,
    pub rule: SignalRule,
    pub max_lead: i64,
    pub value_tolerance: f64,
    pub entries: Vec<CaseStudyEntry<T>>,
    /// Band entries not matched to any recession.
    pub unmatched_signals: Vec<SignalEvent<T>>,
}

/// Collect signals under `rule`, match them to the calendar and annotate each
/// recession against the published case (if one exists for its start).
pub fn case_study_report<T: Scalar>(
    bundle: &IndicatorBundle<T>,
    cal: &RecessionCalendar,
    band: &Band<T>,
    rule: SignalRule,
    max_lead: i64,
) -> Result<CaseStudyReport<T>> {
    let events = rule.candidates(&bundle.e_rule, band);
    let matches = match_events(&events, cal, rule.min_lead(), max_lead)?;
    let cases = published_cases();
    let first = bundle.e_rule.first_date();
    let last = bundle.e_rule.last_date();
    let covers = |from: MonthDate, to: MonthDate| matches!((first, last), (Some(f), Some(l)) if f <= from && to <= l);

    let entries = cal
        .intervals()
        .iter()
        .zip(matches.iter())
        .map(|(iv, m)| {
            let case = cases.iter().find(|c| c.recession_start == iv.start);
            let window_covered = covers(iv.start.add_months(-max_lead), iv.start);
            let e_at = case.and_then(|c| bundle.e_rule.get(c.trigger));
            let value_check = match (case, e_at) {
                (None, _) => Check::NotAsserted,
                (Some(_), None) => Check::InsufficientData,
                (Some(c), Some(v)) => {
                    if (v.to_f64_lossy() - c.value).abs() <= CASE_VALUE_TOLERANCE + 1e-9 {
                        Check::Pass
                    } else {
                        Check::Fail
                    }
                }
            };
            let lead_check = match case.and_then(|c| c.lead_tolerance.map(|t| (c, t))) {
                None => Check::NotAsserted,
                Some(_) if !window_covered => Check::InsufficientData,
                Some((c, tol)) => match m.lead_months {
                    Some(l) if (l - c.lead_months).abs() <= tol => Check::Pass,
                    _ => Check::Fail,
                },
            };
            CaseStudyEntry {
                label: case
                    .map(|c| c.label.to_string())
                    .unwrap_or_else(|| format!("{}..{}", iv.start, iv.end)),
                recession_start: iv.start,
                recession_end: iv.end,
                cited_trigger: case.map(|c| c.trigger),
                cited_value: case.map(|c| c.value),
                e_rule_at_trigger: e_at,
                value_check,
                matched: m.clone(),
                cited_lead: case.map(|c| c.lead_months),
                lead_check,
                note: case.and_then(|c| c.note.map(str::to_string)).or_else(|| {
                    (!window_covered).then(|| {
                        "insufficient data: bundle does not cover the matching window".into()
                    })
                }),
            }
        })
        .collect();

    let matched_dates: Vec<MonthDate> = matches
        .iter()
        .filter_map(|m| m.matched_signal.map(|s| s.date))
        .collect();
    let unmatched_signals = events
        .into_iter()
        .filter(|e| !matched_dates.contains(&e.date))
        .collect();

    let unmatched_signals = match rule {
        SignalRule::BandEntry => unmatched_signals,
        // every in-band month is a candidate; listing them all is noise
        SignalRule::LastInBand => Vec::new(),
    };
    Ok(CaseStudyReport {
        band: *band,
        rule,
        max_lead,
        value_tolerance: CASE_VALUE_TOLERANCE,
        entries,
        unmatched_signals,
    })
}
