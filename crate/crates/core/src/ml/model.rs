use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::{chrono_split, Dataset};
use super::ensemble::{train_gboost, train_rforest, BoostConfig, ForestConfig};
use super::linear::{linear_score, train_linear_svm, train_logreg, LogRegConfig, SvmConfig};
use super::metrics::{evaluate, MetricsReport};
use super::tree::Tree;
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    LinearSvm,
    GradientBoosting,
    RandomForest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Logreg,
        ModelKind::LinearSvm,
        ModelKind::GradientBoosting,
        ModelKind::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::RandomForest => "random_forest",
        }
    }

    /// Row label used in metric tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Logreg => "Logistic Regression",
            ModelKind::LinearSvm => "SVC (linear)",
            ModelKind::GradientBoosting => "Gradient Boosting",
            ModelKind::RandomForest => "Random Forest",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logreg" | "logistic" => Ok(ModelKind::Logreg),
            "linear_svm" | "svm" | "svc" => Ok(ModelKind::LinearSvm),
            "gradient_boosting" | "gboost" | "boosting" => Ok(ModelKind::GradientBoosting),
            "random_forest" | "forest" | "rf" => Ok(ModelKind::RandomForest),
            other => Err(Error::InvalidArgument(format!(
                "unknown model `{other}` (expected logreg|svm|gboost|forest)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "hyperparameters", rename_all = "snake_case")]
pub enum ModelConfig {
    Logreg(LogRegConfig),
    LinearSvm(SvmConfig),
    GradientBoosting(BoostConfig),
    RandomForest(ForestConfig),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Logreg => ModelConfig::Logreg(LogRegConfig::default()),
            ModelKind::LinearSvm => ModelConfig::LinearSvm(SvmConfig::default()),
            ModelKind::GradientBoosting => ModelConfig::GradientBoosting(BoostConfig::default()),
            ModelKind::RandomForest => ModelConfig::RandomForest(ForestConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Logreg(_) => ModelKind::Logreg,
            ModelConfig::LinearSvm(_) => ModelKind::LinearSvm,
            ModelConfig::GradientBoosting(_) => ModelKind::GradientBoosting,
            ModelConfig::RandomForest(_) => ModelKind::RandomForest,
        }
    }

    pub fn train<T: Scalar>(&self, ds: &Dataset<T>) -> Result<ClassifierModel<T>> {
        match *self {
            ModelConfig::Logreg(c) => train_logreg(ds, c),
            ModelConfig::LinearSvm(c) => train_linear_svm(ds, c),
            ModelConfig::GradientBoosting(c) => train_gboost(ds, c),
            ModelConfig::RandomForest(c) => train_rforest(ds, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "form", rename_all = "snake_case")]
pub enum ModelParams<T = f64> {
    Linear {
        weights: Vec<T>,
        bias: T,
    },
    Boosted {
        init: T,
        shrinkage: T,
        trees: Vec<Tree<T>>,
    },
    Forest {
        trees: Vec<Tree<T>>,
    },
}

/// A trained model. Fields are private so a model cannot change after
/// training; rebuild it from JSON instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClassifierModel<T = f64> {
    format_version: u32,
    #[serde(flatten)]
    config: ModelConfig,
    parameters: ModelParams<T>,
}

impl<T: Scalar> ClassifierModel<T> {
    pub(super) fn new(config: ModelConfig, parameters: ModelParams<T>) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            config,
            parameters,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.parameters
    }

    /// Raw decision value: margin for linear models, log-odds for boosting,
    /// vote share for the forest.
    pub fn score(&self, x: &[T]) -> T {
        match &self.parameters {
            ModelParams::Linear { weights, bias } => linear_score(weights, *bias, x),
            ModelParams::Boosted {
                init,
                shrinkage,
                trees,
            } => *init + trees.iter().map(|t| *shrinkage * t.predict(x)).sum::<T>(),
            ModelParams::Forest { trees } => {
                let votes = trees.iter().filter(|t| t.predict(x) > T::lit(0.5)).count();
                T::count(votes) / T::count(trees.len().max(1))
            }
        }
    }

    /// Probability of recession, always in `[0, 1]`.
    pub fn predict_proba(&self, x: &[T]) -> T {
        let s = self.score(x);
        let p = match self.parameters {
            ModelParams::Forest { .. } => s,
            _ => sigmoid(s),
        };
        p.max(T::zero()).min(T::one())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SuiteRow<T = f64> {
    pub model: ModelKind,
    pub train: MetricsReport,
    pub test: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted: Option<ClassifierModel<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SuiteReport<T = f64> {
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_frac: f64,
    pub threshold: f64,
    pub rows: Vec<SuiteRow<T>>,
}

/// Chronological split, then train and score each config on both sides.
pub fn run_suite<T: Scalar>(
    ds: &Dataset<T>,
    train_frac: f64,
    configs: &[ModelConfig],
    threshold: f64,
    keep_models: bool,
) -> Result<SuiteReport<T>> {
    let (train, test) = chrono_split(ds, train_frac)?;
    train.require_both_classes("training split")?;
    test.require_both_classes("test split")?;
    let rows = configs
        .iter()
        .map(|cfg| {
            let model = cfg.train(&train)?;
            Ok(SuiteRow {
                model: cfg.kind(),
                train: evaluate(&model, &train, threshold)?,
                test: evaluate(&model, &test, threshold)?,
                fitted: keep_models.then_some(model),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport {
        train_rows: train.len(),
        test_rows: test.len(),
        train_frac,
        threshold,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MonthDate;

    fn ds() -> Dataset<f64> {
        let xs: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        Dataset::new(
            xs.iter().map(|&x| vec![x, x * x]).collect(),
            xs.iter().map(|&x| x > 0.3).collect(),
            (0..30)
                .map(|i| MonthDate::ym(2000, 1).add_months(i))
                .collect(),
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_every_kind() {
        let d = ds();
        for kind in ModelKind::ALL {
            let cfg = match ModelConfig::default_for(kind) {
                ModelConfig::RandomForest(c) => {
                    ModelConfig::RandomForest(ForestConfig { n_trees: 5, ..c })
                }
                ModelConfig::GradientBoosting(c) => {
                    ModelConfig::GradientBoosting(BoostConfig { n_rounds: 5, ..c })
                }
                other => other,
            };
            let m = cfg.train(&d).unwrap();
            let json = m.to_json().unwrap();
            let back = ClassifierModel::<f64>::from_json(&json).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.kind(), kind);
            let v: serde_json::Value = serde_json::from_str(&json).unwrap();
            assert_eq!(v["kind"], kind.as_str());
            assert_eq!(v["format_version"], 1);
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let m = ModelConfig::default_for(ModelKind::Logreg)
            .train(&ds())
            .unwrap();
        let json = m
            .to_json()
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(ClassifierModel::<f64>::from_json(&json).is_err());
    }

    #[test]
    fn kind_names_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!(
            "forest".parse::<ModelKind>().unwrap(),
            ModelKind::RandomForest
        );
        assert!("knn".parse::<ModelKind>().is_err());
    }
}
