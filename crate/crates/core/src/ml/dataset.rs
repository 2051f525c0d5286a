use serde::{Deserialize, Serialize};

use crate::backtest::RecessionCalendar;
use crate::error::{Error, Result};
use crate::indicators::IndicatorBundle;
use crate::scalar::Scalar;
use crate::series::{MonthDate, MonthlySeries};

/// Feature matrix, 0/1 recession labels and the month of each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dataset<T = f64> {
    features: Vec<Vec<T>>,
    labels: Vec<bool>,
    dates: Vec<MonthDate>,
    feature_names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        features: Vec<Vec<T>>,
        labels: Vec<bool>,
        dates: Vec<MonthDate>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.len() != labels.len() || features.len() != dates.len() {
            return Err(Error::InvalidArgument(format!(
                "row counts differ: {} feature rows, {} labels, {} dates",
                features.len(),
                labels.len(),
                dates.len()
            )));
        }
        let width = feature_names.len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} features, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has a non-finite feature"
                )));
            }
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "dates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            features,
            labels,
            dates,
            feature_names,
        })
    }

    pub fn features(&self) -> &[Vec<T>] {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn dates(&self) -> &[MonthDate] {
        &self.dates
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn positive_fraction(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.positives() as f64 / self.len() as f64)
    }

    /// Error unless both classes occur; `what` names the dataset in the message.
    pub fn require_both_classes(&self, what: &str) -> Result<()> {
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            return Err(Error::DegenerateDataset(format!(
                "{what} has {} rows, all labelled {}",
                self.len(),
                if pos == 0 { "expansion" } else { "recession" }
            )));
        }
        Ok(())
    }

    /// Same rows with every date shifted by `months`.
    pub fn shift_dates(&self, months: i64) -> Self {
        Self {
            dates: self.dates.iter().map(|d| d.add_months(months)).collect(),
            ..self.clone()
        }
    }

    fn rows(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            features: self.features[range.clone()].to_vec(),
            labels: self.labels[range.clone()].to_vec(),
            dates: self.dates[range].to_vec(),
            feature_names: self.feature_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub lags: usize,
    /// Label month is `t + horizon`.
    pub horizon: usize,
    /// Also feed current spread and Sahm values.
    pub include_components: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            lags: 3,
            horizon: 0,
            include_components: false,
        }
    }
}

/// Rows `[E(t), E(t-1), ..., E(t-lags)]` labelled with recession membership
/// of month `t + horizon`. Months whose lags or label month fall outside the
/// series are dropped.
pub fn build_dataset<T: Scalar>(
    e: &MonthlySeries<T>,
    cal: &RecessionCalendar,
    lags: usize,
    horizon: usize,
) -> Result<Dataset<T>> {
    assemble(
        e,
        None,
        cal,
        DatasetConfig {
            lags,
            horizon,
            include_components: false,
        },
    )
}

pub fn build_dataset_with<T: Scalar>(
    bundle: &IndicatorBundle<T>,
    cal: &RecessionCalendar,
    cfg: DatasetConfig,
) -> Result<Dataset<T>> {
    assemble(&bundle.e_rule, Some(bundle), cal, cfg)
}

fn assemble<T: Scalar>(
    e: &MonthlySeries<T>,
    bundle: Option<&IndicatorBundle<T>>,
    cal: &RecessionCalendar,
    cfg: DatasetConfig,
) -> Result<Dataset<T>> {
    let mut names: Vec<String> = (0..=cfg.lags).map(|k| format!("e_lag{k}")).collect();
    let components = bundle.filter(|_| cfg.include_components);
    if components.is_some() {
        names.push("spread".into());
        names.push("sahm".into());
    }
    let last = e.last_date();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dates = Vec::new();
    for &(t, _) in e.points() {
        let target = t.add_months(cfg.horizon as i64);
        if last.is_none_or(|l| target > l) {
            continue;
        }
        let Some(mut row) = (0..=cfg.lags)
            .map(|k| e.get(t.add_months(-(k as i64))))
            .collect::<Option<Vec<T>>>()
        else {
            continue;
        };
        if let Some(b) = components {
            match (b.spread.get(t), b.sahm.get(t)) {
                (Some(s), Some(h)) => row.extend([s, h]),
                _ => continue,
            }
        }
        features.push(row);
        labels.push(cal.contains(target));
        dates.push(t);
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no month of {} has {} lags and a label {} months ahead",
            e.series_id(),
            cfg.lags,
            cfg.horizon
        )));
    }
    Dataset::new(features, labels, dates, names)
}

/// First `ceil(train_frac * rows)` rows train, the rest test.
pub fn chrono_split<T: Scalar>(
    ds: &Dataset<T>,
    train_frac: f64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidArgument(
            "train_frac must lie in (0, 1)".into(),
        ));
    }
    let n = ds.len();
    let k = (train_frac * n as f64).ceil() as usize;
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} rows at {train_frac} leaves one side empty"
        )));
    }
    Ok((ds.rows(0..k), ds.rows(k..n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::RecessionInterval;
    use crate::series::Unit;

    fn cal() -> RecessionCalendar {
        RecessionCalendar::new(vec![RecessionInterval {
            start: MonthDate::ym(2020, 3),
            end: MonthDate::ym(2020, 4),
        }])
        .unwrap()
    }

    fn series(n: usize) -> MonthlySeries<f64> {
        MonthlySeries::from_values(
            "E",
            Unit::PercentagePoints,
            MonthDate::ym(2020, 1),
            (0..n).map(|i| i as f64),
        )
        .unwrap()
    }

    #[test]
    fn lag_zero_matches_calendar() {
        let ds = build_dataset(&series(6), &cal(), 0, 0).unwrap();
        assert_eq!(ds.len(), 6);
        assert_eq!(ds.n_features(), 1);
        assert_eq!(ds.labels(), &[false, false, true, true, false, false]);
    }

    #[test]
    fn lags_drop_leading_rows() {
        let ds = build_dataset(&series(10), &cal(), 3, 0).unwrap();
        assert_eq!(ds.len(), 7);
        assert_eq!(ds.dates()[0], MonthDate::ym(2020, 4));
        assert_eq!(ds.features()[0], vec![3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn horizon_shifts_labels_and_drops_tail() {
        let ds = build_dataset(&series(6), &cal(), 0, 2).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.labels(), &[true, true, false, false]);
    }

    #[test]
    fn too_short_is_empty_error() {
        assert!(matches!(
            build_dataset(&series(2), &cal(), 3, 0),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn splits() {
        let ds = build_dataset(&series(10), &cal(), 0, 0).unwrap();
        let (a, b) = chrono_split(&ds, 0.7).unwrap();
        assert_eq!((a.len(), b.len()), (7, 3));
        assert!(a.dates().last() < b.dates().first());
        let two = build_dataset(&series(2), &cal(), 0, 0).unwrap();
        let (a, b) = chrono_split(&two, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert!(chrono_split(&two, 0.99).is_err());
        assert!(chrono_split(&two, 1.0).is_err());
    }

    #[test]
    fn validation() {
        let d = vec![MonthDate::ym(2020, 1)];
        assert!(Dataset::new(
            vec![vec![f64::NAN]],
            vec![true],
            d.clone(),
            vec!["x".into()]
        )
        .is_err());
        assert!(Dataset::<f64>::new(vec![vec![1.0]], vec![], d, vec!["x".into()]).is_err());
    }
}
