//! Sahm rule, 10Y-2Y yield spread and the composite E-Rule series.
//!
//! The source material describes the E-Rule only in words: the yield spread
//! (market expectations) and the Sahm indicator (labour-market reality)
//! "coincide" when the composite approaches zero. Two readings exist:
//!
//! * [`Composition::Difference`]: `E = spread - sahm` (default). This is the
//!   reading that reproduces the published case-study values on the bundled
//!   data, e.g. February 2001: spread 0.44, Sahm 0.20, E = 0.24.
//! * [`Composition::Sum`]: `E = spread + sahm`, the reading suggested by the
//!   phase table (inverted curve plus a rising Sahm rule approaches zero).
//!
//! Both are exposed; every downstream module takes the composition as data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{align, rolling_mean, rolling_min_lagged, MonthlySeries, Unit};

/// Trailing window of the unemployment average.
pub const SAHM_AVERAGE_MONTHS: usize = 3;
/// Months (excluding the current one) searched for the low.
pub const SAHM_LOOKBACK_MONTHS: usize = 12;
/// Conventional Sahm trigger level, percentage points.
pub const SAHM_TRIGGER: f64 = 0.5;

/// How the spread and the Sahm indicator are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// `spread - sahm`
    #[default]
    Difference,
    /// `spread + sahm`
    Sum,
}

impl Composition {
    pub fn combine<T: Scalar>(self, spread: T, sahm: T) -> T {
        match self {
            Composition::Difference => spread - sahm,
            Composition::Sum => spread + sahm,
        }
    }

    /// Recover the spread that yields `e_rule` for a given Sahm value.
    pub fn spread_for<T: Scalar>(self, e_rule: T, sahm: T) -> T {
        match self {
            Composition::Difference => e_rule + sahm,
            Composition::Sum => e_rule - sahm,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Composition::Difference => "difference",
            Composition::Sum => "sum",
        }
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Composition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "difference" | "diff" => Ok(Composition::Difference),
            "sum" => Ok(Composition::Sum),
            other => Err(Error::InvalidArgument(format!(
                "unknown composition `{other}` (expected difference|sum)"
            ))),
        }
    }
}

/// Three-month unemployment average minus its low over the previous twelve
/// months (current month excluded). Values may be negative.
pub fn sahm_rule<T: Scalar>(u: &MonthlySeries<T>) -> Result<MonthlySeries<T>> {
    let avg = rolling_mean(u, SAHM_AVERAGE_MONTHS)?;
    let low = rolling_min_lagged(&avg, SAHM_LOOKBACK_MONTHS)?;
    avg.zip_with(&low, "SAHM", Unit::PercentagePoints, |a, m| a - m)
}

/// 10-year minus 2-year yield on the common dates.
pub fn yield_spread<T: Scalar>(
    t10: &MonthlySeries<T>,
    t2: &MonthlySeries<T>,
) -> Result<MonthlySeries<T>> {
    t10.zip_with(t2, "SPREAD_10Y2Y", Unit::PercentagePoints, |a, b| a - b)
}

pub fn e_rule<T: Scalar>(
    spread: &MonthlySeries<T>,
    sahm: &MonthlySeries<T>,
    composition: Composition,
) -> Result<MonthlySeries<T>> {
    spread.zip_with(sahm, "E_RULE", Unit::PercentagePoints, |s, h| {
        composition.combine(s, h)
    })
}

/// Spread, Sahm and E-Rule series sharing one date set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IndicatorBundle<T = f64> {
    pub spread: MonthlySeries<T>,
    pub sahm: MonthlySeries<T>,
    pub e_rule: MonthlySeries<T>,
    pub composition: Composition,
}

impl<T: Scalar> IndicatorBundle<T> {
    /// Align a precomputed spread and Sahm series and compose them.
    pub fn from_parts(
        spread: &MonthlySeries<T>,
        sahm: &MonthlySeries<T>,
        composition: Composition,
    ) -> Result<Self> {
        let (spread, sahm) = align(spread, sahm);
        let e_rule = e_rule(&spread, &sahm, composition)?;
        Ok(Self {
            spread,
            sahm,
            e_rule,
            composition,
        })
    }

    pub fn len(&self) -> usize {
        self.e_rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e_rule.is_empty()
    }

    /// Restrict all three series to an inclusive date range.
    pub fn slice(&self, from: Option<crate::MonthDate>, to: Option<crate::MonthDate>) -> Self {
        Self {
            spread: self.spread.slice(from, to),
            sahm: self.sahm.slice(from, to),
            e_rule: self.e_rule.slice(from, to),
            composition: self.composition,
        }
    }
}

/// Unemployment rate plus 10Y and 2Y yields into an aligned bundle.
pub fn build_bundle<T: Scalar>(
    u: &MonthlySeries<T>,
    t10: &MonthlySeries<T>,
    t2: &MonthlySeries<T>,
    composition: Composition,
) -> Result<IndicatorBundle<T>> {
    let spread = yield_spread(t10, t2)?;
    let sahm = sahm_rule(u)?;
    IndicatorBundle::from_parts(&spread, &sahm, composition)
}

/// Agreement statistics between a recomputed and a published Sahm series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SahmComparison {
    pub overlap_months: usize,
    pub within_tolerance: usize,
    pub tolerance: f64,
    pub max_abs_diff: f64,
    pub mean_abs_diff: f64,
}

impl SahmComparison {
    pub fn fraction_within(&self) -> f64 {
        if self.overlap_months == 0 {
            0.0
        } else {
            self.within_tolerance as f64 / self.overlap_months as f64
        }
    }
}

pub fn compare_sahm<T: Scalar>(
    computed: &MonthlySeries<T>,
    published: &MonthlySeries<T>,
    tolerance: f64,
) -> SahmComparison {
    let (a, b) = align(computed, published);
    let diffs: Vec<f64> = a
        .values()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs().to_f64_lossy())
        .collect();
    let n = diffs.len();
    SahmComparison {
        overlap_months: n,
        within_tolerance: diffs.iter().filter(|d| **d <= tolerance + 1e-12).count(),
        tolerance,
        max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
        mean_abs_diff: if n == 0 {
            0.0
        } else {
            diffs.iter().sum::<f64>() / n as f64
        },
    }
}
