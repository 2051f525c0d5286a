//! Threshold-band and zero-crossing detection on an E-Rule series, plus the
//! pointwise phase classification of the expectations-versus-reality table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::SAHM_TRIGGER;
use crate::scalar::Scalar;
use crate::series::{MonthDate, MonthlySeries};

/// Closed interval `[lo, hi]` around zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Band<T = f64> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Band<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > T::zero() || hi < T::zero() {
            return Err(Error::InvalidArgument(format!(
                "band [{lo}, {hi}] must satisfy lo <= 0 <= hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `[-half_width, half_width]`.
    pub fn symmetric(half_width: T) -> Result<Self> {
        Self::new(-half_width, half_width)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }
}

impl<T: Scalar> fmt::Display for Band<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    BandEntryFromBelow,
    ZeroCrossUp,
    ZeroCrossDown,
    /// Any month inside the band. Never produced by [`detect_signals`]; see
    /// [`in_band_months`].
    InBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SignalEvent<T = f64> {
    pub date: MonthDate,
    pub value: T,
    pub kind: SignalKind,
}

/// Scan adjacent month pairs and emit band entries (from below only) and
/// zero crossings. Events come out ordered by date; a band entry precedes a
/// zero crossing in the same month.
pub fn detect_signals<T: Scalar>(e: &MonthlySeries<T>, band: &Band<T>) -> Vec<SignalEvent<T>> {
    let mut events = Vec::new();
    for pair in e.points().windows(2) {
        let ((prev_date, prev), (date, value)) = (pair[0], pair[1]);
        if date.months_since(prev_date) != 1 {
            continue;
        }
        if band.contains(value) && prev < band.lo() {
            events.push(SignalEvent {
                date,
                value,
                kind: SignalKind::BandEntryFromBelow,
            });
        }
        if value >= T::zero() && prev < T::zero() {
            events.push(SignalEvent {
                date,
                value,
                kind: SignalKind::ZeroCrossUp,
            });
        } else if value < T::zero() && prev >= T::zero() {
            events.push(SignalEvent {
                date,
                value,
                kind: SignalKind::ZeroCrossDown,
            });
        }
    }
    events
}

/// Just the band entries; the default recession signal.
pub fn band_entries<T: Scalar>(e: &MonthlySeries<T>, band: &Band<T>) -> Vec<SignalEvent<T>> {
    detect_signals(e, band)
        .into_iter()
        .filter(|ev| ev.kind == SignalKind::BandEntryFromBelow)
        .collect()
}

/// Every month whose value lies inside the band.
pub fn in_band_months<T: Scalar>(e: &MonthlySeries<T>, band: &Band<T>) -> Vec<SignalEvent<T>> {
    e.points()
        .iter()
        .filter(|(_, v)| band.contains(*v))
        .map(|&(date, value)| SignalEvent {
            date,
            value,
            kind: SignalKind::InBand,
        })
        .collect()
}

/// Economy phase from one month of spread and Sahm readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    EarlyWarning,
    CracksAppear,
    RecessionConfirmed,
    Recovery,
    Neutral,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::EarlyWarning => "early_warning",
            Phase::CracksAppear => "cracks_appear",
            Phase::RecessionConfirmed => "recession_confirmed",
            Phase::Recovery => "recovery",
            Phase::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sahm cut-offs used by [`classify_phase_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseThresholds {
    /// Below this the labour market still reads "low".
    pub cracks_sahm: f64,
    pub trigger_sahm: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            cracks_sahm: 0.1,
            trigger_sahm: SAHM_TRIGGER,
        }
    }
}

pub fn classify_phase<T: Scalar>(spread: T, sahm: T, sahm_prev: T) -> Phase {
    classify_phase_with(spread, sahm, sahm_prev, &PhaseThresholds::default())
}

pub fn classify_phase_with<T: Scalar>(
    spread: T,
    sahm: T,
    sahm_prev: T,
    th: &PhaseThresholds,
) -> Phase {
    let cracks = T::lit(th.cracks_sahm);
    let trigger = T::lit(th.trigger_sahm);
    let inverted = spread < T::zero();
    if inverted && sahm < cracks {
        Phase::EarlyWarning
    } else if inverted && sahm < trigger {
        Phase::CracksAppear
    } else if inverted && sahm >= trigger {
        Phase::RecessionConfirmed
    } else if sahm >= trigger && sahm <= sahm_prev {
        Phase::Recovery
    } else {
        Phase::Neutral
    }
}

/// Classify every month of an aligned spread/Sahm pair. The first month
/// uses its own Sahm value as the previous reading.
pub fn classify_series<T: Scalar>(
    spread: &MonthlySeries<T>,
    sahm: &MonthlySeries<T>,
    th: &PhaseThresholds,
) -> Vec<(MonthDate, Phase)> {
    let (spread, sahm) = crate::series::align(spread, sahm);
    let mut prev: Option<(MonthDate, T)> = None;
    spread
        .points()
        .iter()
        .zip(sahm.values())
        .map(|(&(d, s), h)| {
            let h_prev = match prev {
                Some((pd, pv)) if d.months_since(pd) == 1 => pv,
                _ => h,
            };
            prev = Some((d, h));
            (d, classify_phase_with(s, h, h_prev, th))
        })
        .collect()
}
