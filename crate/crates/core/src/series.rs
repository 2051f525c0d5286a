//! Calendar-month time series and the rolling-window arithmetic the
//! indicators are built from.
//!
//! A missing month is simply an absent date. Any window that would span a
//! missing month produces no output rather than renormalising over the
//! months that are present.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A calendar month. Ordered lexicographically by `(year, month)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonthDate {
    year: i32,
    month: u32,
}

impl MonthDate {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!(
                "month {month} outside 1..=12"
            )));
        }
        Ok(Self { year, month })
    }

    /// Panicking constructor for literals in tests and fixtures.
    pub const fn ym(year: i32, month: u32) -> Self {
        assert!(month >= 1 && month <= 12, "month out of range");
        Self { year, month }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    /// Months elapsed since January of year 0.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) + 1;
        Self {
            year: year as i32,
            month: month as u32,
        }
    }

    /// Shift by a signed number of months.
    pub fn add_months(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// `self - other` in months.
    pub fn months_since(self, other: MonthDate) -> i64 {
        self.ordinal() - other.ordinal()
    }
}

impl fmt::Display for MonthDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthDate {
    type Err = Error;

    /// Accepts `YYYY-MM` or `YYYY-MM-DD` (the day is discarded).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("expected YYYY-MM, got `{s}`"));
        let mut parts = s.splitn(3, '-');
        let year: i32 = parts
            .next()
            .filter(|p| p.len() == 4)
            .and_then(|p| p.parse().ok())
            .ok_or_else(bad)?;
        let month: u32 = parts
            .next()
            .filter(|p| p.len() == 2)
            .and_then(|p| p.parse().ok())
            .ok_or_else(bad)?;
        if let Some(day) = parts.next() {
            let day: u32 = day.parse().map_err(|_| bad())?;
            chrono::NaiveDate::from_ymd_opt(year, month, day).ok_or_else(bad)?;
        }
        MonthDate::new(year, month)
    }
}

impl Serialize for MonthDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Measurement unit of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Percent,
    PercentagePoints,
}

/// Ordered monthly observations of a single variable.
///
/// Dates are strictly increasing and every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MonthlySeries<T = f64> {
    series_id: String,
    unit: Unit,
    points: Vec<(MonthDate, T)>,
}

impl<T: Scalar> MonthlySeries<T> {
    pub fn new(
        series_id: impl Into<String>,
        unit: Unit,
        points: Vec<(MonthDate, T)>,
    ) -> Result<Self> {
        let series_id = series_id.into();
        for pair in points.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(Error::InvalidSeries(format!(
                    "{series_id}: dates not strictly increasing at {}",
                    pair[1].0
                )));
            }
        }
        if let Some((d, _)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "{series_id}: non-finite value at {d}"
            )));
        }
        Ok(Self {
            series_id,
            unit,
            points,
        })
    }

    pub fn empty(series_id: impl Into<String>, unit: Unit) -> Self {
        Self {
            series_id: series_id.into(),
            unit,
            points: Vec::new(),
        }
    }

    /// Consecutive months starting at `start`.
    pub fn from_values(
        series_id: impl Into<String>,
        unit: Unit,
        start: MonthDate,
        values: impl IntoIterator<Item = T>,
    ) -> Result<Self> {
        let points = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (start.add_months(i as i64), v))
            .collect();
        Self::new(series_id, unit, points)
    }

    pub fn series_id(&self) -> &str {
        &self.series_id
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn points(&self) -> &[(MonthDate, T)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = MonthDate> + '_ {
        self.points.iter().map(|(d, _)| *d)
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.points.iter().map(|(_, v)| *v)
    }

    pub fn first_date(&self) -> Option<MonthDate> {
        self.points.first().map(|(d, _)| *d)
    }

    pub fn last_date(&self) -> Option<MonthDate> {
        self.points.last().map(|(d, _)| *d)
    }

    pub fn get(&self, date: MonthDate) -> Option<T> {
        self.points
            .binary_search_by(|(d, _)| d.cmp(&date))
            .ok()
            .map(|i| self.points[i].1)
    }

    pub fn with_id(mut self, series_id: impl Into<String>) -> Self {
        self.series_id = series_id.into();
        self
    }

    /// Points with `from <= date <= to`; either bound may be open.
    pub fn slice(&self, from: Option<MonthDate>, to: Option<MonthDate>) -> Self {
        let points = self
            .points
            .iter()
            .filter(|(d, _)| from.is_none_or(|f| *d >= f) && to.is_none_or(|t| *d <= t))
            .copied()
            .collect();
        Self {
            series_id: self.series_id.clone(),
            unit: self.unit,
            points,
        }
    }

    /// Apply `f` to every value, keeping dates.
    pub fn map_values(&self, unit: Unit, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(
            self.series_id.clone(),
            unit,
            self.points.iter().map(|&(d, v)| (d, f(v))).collect(),
        )
    }

    /// Pointwise combination on the intersection of dates.
    pub fn zip_with(
        &self,
        other: &MonthlySeries<T>,
        series_id: impl Into<String>,
        unit: Unit,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        let points = intersect(&self.points, &other.points)
            .map(|(d, a, b)| (d, f(a, b)))
            .collect();
        Self::new(series_id, unit, points)
    }
}

/// Merge-walk over two date-sorted point lists yielding shared dates.
fn intersect<'a, T: Copy>(
    a: &'a [(MonthDate, T)],
    b: &'a [(MonthDate, T)],
) -> impl Iterator<Item = (MonthDate, T, T)> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let out = (a[i].0, a[i].1, b[j].1);
                    i += 1;
                    j += 1;
                    return Some(out);
                }
            }
        }
        None
    })
}

/// True when `points[end + 1 - len ..= end]` covers `len` consecutive months.
fn is_contiguous<T>(points: &[(MonthDate, T)], end: usize, len: usize) -> bool {
    end + 1 >= len && points[end].0.months_since(points[end + 1 - len].0) == len as i64 - 1
}

/// Trailing arithmetic mean over `window` consecutive months ending at each date.
pub fn rolling_mean<T: Scalar>(s: &MonthlySeries<T>, window: usize) -> Result<MonthlySeries<T>> {
    if window == 0 {
        return Err(Error::InvalidArgument("rolling window must be >= 1".into()));
    }
    let n = T::count(window);
    let points = (0..s.points.len())
        .filter(|&i| is_contiguous(&s.points, i, window))
        .map(|i| {
            let sum: T = s.points[i + 1 - window..=i].iter().map(|(_, v)| *v).sum();
            (s.points[i].0, sum / n)
        })
        .collect();
    MonthlySeries::new(s.series_id.clone(), s.unit, points)
}

/// Minimum over the `lookback` months strictly before each date.
///
/// Output at month `d` exists iff months `d - lookback ..= d - 1` are all
/// present; `d` itself need not be in the input.
pub fn rolling_min_lagged<T: Scalar>(
    s: &MonthlySeries<T>,
    lookback: usize,
) -> Result<MonthlySeries<T>> {
    if lookback == 0 {
        return Err(Error::InvalidArgument("lookback must be >= 1".into()));
    }
    let points = (0..s.points.len())
        .filter(|&i| is_contiguous(&s.points, i, lookback))
        .map(|i| {
            let min = s.points[i + 1 - lookback..=i]
                .iter()
                .map(|(_, v)| *v)
                .fold(T::infinity(), T::min);
            (s.points[i].0.add_months(1), min)
        })
        .collect();
    MonthlySeries::new(s.series_id.clone(), s.unit, points)
}

/// Restrict both series to their common dates.
pub fn align<T: Scalar>(
    a: &MonthlySeries<T>,
    b: &MonthlySeries<T>,
) -> (MonthlySeries<T>, MonthlySeries<T>) {
    let (pa, pb) = intersect(&a.points, &b.points)
        .map(|(d, x, y)| ((d, x), (d, y)))
        .unzip();
    (
        MonthlySeries {
            series_id: a.series_id.clone(),
            unit: a.unit,
            points: pa,
        },
        MonthlySeries {
            series_id: b.series_id.clone(),
            unit: b.unit,
            points: pb,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pct(start: MonthDate, vals: &[f64]) -> MonthlySeries {
        MonthlySeries::from_values("X", Unit::Percent, start, vals.iter().copied()).unwrap()
    }

    #[test]
    fn month_date_parsing_and_arithmetic() {
        let d: MonthDate = "2007-08".parse().unwrap();
        assert_eq!(d, MonthDate::ym(2007, 8));
        assert_eq!("2007-08-01".parse::<MonthDate>().unwrap(), d);
        assert!("2007-13".parse::<MonthDate>().is_err());
        assert!("2007-02-30".parse::<MonthDate>().is_err());
        assert!("07-08".parse::<MonthDate>().is_err());
        assert_eq!(MonthDate::ym(2007, 12).months_since(d), 4);
        assert_eq!(
            MonthDate::ym(2000, 1).add_months(-1),
            MonthDate::ym(1999, 12)
        );
        assert_eq!(d.to_string(), "2007-08");
        assert!(MonthDate::ym(1999, 12) < MonthDate::ym(2000, 1));
    }

    #[test]
    fn series_rejects_unsorted_and_non_finite() {
        let d = MonthDate::ym(2000, 1);
        assert!(MonthlySeries::new("X", Unit::Percent, vec![(d, 1.0), (d, 2.0)]).is_err());
        assert!(MonthlySeries::new("X", Unit::Percent, vec![(d, f64::NAN)]).is_err());
    }

    #[test]
    fn rolling_mean_constant_series() {
        let s = pct(MonthDate::ym(1990, 1), &[4.0, 4.0, 4.0]);
        let m = rolling_mean(&s, 3).unwrap();
        assert_eq!(m.points(), &[(MonthDate::ym(1990, 3), 4.0)]);
        assert_eq!(m.unit(), Unit::Percent);
    }

    #[test]
    fn rolling_mean_arithmetic() {
        let s = pct(MonthDate::ym(2000, 1), &[1.0, 2.0, 6.0]);
        let m = rolling_mean(&s, 3).unwrap();
        assert_eq!(m.points(), &[(MonthDate::ym(2000, 3), 3.0)]);
    }

    #[test]
    fn rolling_mean_gap_suppresses_output() {
        let s = MonthlySeries::new(
            "X",
            Unit::Percent,
            vec![
                (MonthDate::ym(2000, 1), 1.0),
                (MonthDate::ym(2000, 3), 2.0),
                (MonthDate::ym(2000, 4), 3.0),
                (MonthDate::ym(2000, 5), 4.0),
            ],
        )
        .unwrap();
        let m = rolling_mean(&s, 3).unwrap();
        assert!(m.get(MonthDate::ym(2000, 3)).is_none());
        assert!(m.get(MonthDate::ym(2000, 4)).is_none());
        assert_eq!(m.get(MonthDate::ym(2000, 5)), Some(3.0));
    }

    #[test]
    fn rolling_mean_empty_and_zero_window() {
        let s: MonthlySeries = MonthlySeries::empty("X", Unit::Percent);
        assert!(rolling_mean(&s, 3).unwrap().is_empty());
        assert!(matches!(
            rolling_mean(&s, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rolling_min_lagged_constant() {
        let s = pct(MonthDate::ym(2000, 1), &[4.0; 20]);
        let m = rolling_min_lagged(&s, 12).unwrap();
        assert!(m.values().all(|v| v == 4.0));
        assert_eq!(m.first_date(), Some(MonthDate::ym(2001, 1)));
        assert_eq!(m.len(), 9);
    }

    #[test]
    fn rolling_min_lagged_picks_window_minimum() {
        // minimum 3.5 sits exactly at d - 12, later values >= 3.5
        let mut vals = vec![3.5];
        vals.extend((1..12).map(|i| 3.5 + 0.05 * i as f64));
        vals.push(3.0); // value at d itself is excluded
        let s = pct(MonthDate::ym(2000, 1), &vals);
        let m = rolling_min_lagged(&s, 12).unwrap();
        assert_eq!(m.get(MonthDate::ym(2001, 1)), Some(3.5));
    }

    #[test]
    fn rolling_min_lagged_rising_series_is_value_twelve_months_back() {
        let vals: Vec<f64> = (0..30).map(|i| 4.0 + 0.1 * i as f64).collect();
        let s = pct(MonthDate::ym(2000, 1), &vals);
        let m = rolling_min_lagged(&s, 12).unwrap();
        for (d, v) in m.points() {
            let back = s.get(d.add_months(-12)).unwrap();
            assert!((v - back).abs() < 1e-12, "{d}: {v} vs {back}");
        }
    }

    #[test]
    fn rolling_min_lagged_rejects_zero() {
        let s = pct(MonthDate::ym(2000, 1), &[1.0]);
        assert!(rolling_min_lagged(&s, 0).is_err());
    }

    #[test]
    fn align_overlap_identity_and_disjoint() {
        let a = pct(MonthDate::ym(1990, 1), &[1.0; 132]);
        let b = pct(MonthDate::ym(1995, 1), &[2.0; 132]);
        let (x, y) = align(&a, &b);
        assert_eq!(x.first_date(), Some(MonthDate::ym(1995, 1)));
        assert_eq!(x.last_date(), Some(MonthDate::ym(2000, 12)));
        assert_eq!(x.len(), y.len());
        assert!(x.dates().eq(y.dates()));

        let (x2, _) = align(&a, &a);
        assert_eq!(x2, a);

        let c = pct(MonthDate::ym(2020, 1), &[1.0; 3]);
        let (e1, e2) = align(&a, &c);
        assert!(e1.is_empty() && e2.is_empty());
    }
}
