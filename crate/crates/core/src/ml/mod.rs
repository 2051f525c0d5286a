//! Recession classifiers trained on lagged E-Rule values.
//!
//! Four models are implemented from scratch: logistic regression and a linear
//! SVM (both full-batch, deterministic), gradient-boosted regression trees on
//! the logistic loss, and a random forest of Gini trees. All of them expose a
//! probability of recession through [`ClassifierModel::predict_proba`].

mod dataset;
mod ensemble;
mod linear;
mod metrics;
mod model;
mod tree;

pub use dataset::{build_dataset, build_dataset_with, chrono_split, Dataset, DatasetConfig};
pub use ensemble::{train_gboost, train_rforest, BoostConfig, ForestConfig};
pub use linear::{
    logistic_gradient, logistic_loss, train_linear_svm, train_logreg, LogRegConfig, SvmConfig,
};
pub use metrics::{auc, auc_pairwise, evaluate, metrics_table, MetricsReport};
pub use model::{
    run_suite, ClassifierModel, ModelConfig, ModelKind, ModelParams, SuiteReport, SuiteRow,
    MODEL_FORMAT_VERSION,
};
pub use tree::{fit_classification_tree, fit_regression_tree, Node, Tree};
