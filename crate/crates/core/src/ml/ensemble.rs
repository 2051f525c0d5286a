use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::model::{ClassifierModel, ModelConfig, ModelParams};
use super::tree::{grow, label_targets, Criterion, GrowSpec, Tree};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub depth: usize,
    pub shrinkage: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            depth: 2,
            shrinkage: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub feature_frac: f64,
    /// Resample rows with replacement for each tree.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 6,
            feature_frac: 0.7,
            bootstrap: true,
            seed: 42,
        }
    }
}

/// Stagewise logistic boosting: each round fits a squared-error tree to the
/// residuals `y - p` and sets leaves to the Newton step `sum(r) / sum(p(1-p))`.
pub fn train_gboost<T: Scalar>(ds: &Dataset<T>, cfg: BoostConfig) -> Result<ClassifierModel<T>> {
    ds.require_both_classes("training set")?;
    let y = label_targets(ds);
    let prior = T::count(ds.positives()) / T::count(ds.len());
    let init = (prior / (T::one() - prior)).ln();
    let shrinkage = T::lit(cfg.shrinkage);
    let mut f = vec![init; ds.len()];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    for _ in 0..cfg.n_rounds {
        let p: Vec<T> = f.iter().map(|&v| sigmoid(v)).collect();
        let r: Vec<T> = y.iter().zip(&p).map(|(&yi, &pi)| yi - pi).collect();
        let h: Vec<T> = p.iter().map(|&pi| pi * (T::one() - pi)).collect();
        let leaf = |rows: &[usize]| {
            let num: T = rows.iter().map(|&i| r[i]).sum();
            let den: T = rows.iter().map(|&i| h[i]).sum();
            num / den.max(T::lit(1e-12))
        };
        let spec = GrowSpec {
            features: ds.features(),
            targets: &r,
            criterion: Criterion::SquaredError,
            max_depth: cfg.depth,
            leaf_value: &leaf,
        };
        let all: Vec<usize> = (0..ds.n_features()).collect();
        let tree = grow(&spec, (0..ds.len()).collect(), &mut || all.clone());
        for (fi, x) in f.iter_mut().zip(ds.features()) {
            *fi += shrinkage * tree.predict(x);
        }
        trees.push(tree);
    }
    Ok(ClassifierModel::new(
        ModelConfig::GradientBoosting(cfg),
        ModelParams::Boosted {
            init,
            shrinkage,
            trees,
        },
    ))
}

/// Bagged Gini trees. Tree `i` draws its bootstrap sample and per-split
/// feature subsets from a ChaCha8 stream keyed by `(seed, i)`.
pub fn train_rforest<T: Scalar>(ds: &Dataset<T>, cfg: ForestConfig) -> Result<ClassifierModel<T>> {
    ds.require_both_classes("training set")?;
    if !(cfg.feature_frac > 0.0 && cfg.feature_frac <= 1.0) {
        return Err(Error::InvalidArgument(
            "feature_frac must lie in (0, 1]".into(),
        ));
    }
    let y = label_targets(ds);
    let n = ds.len();
    let p = ds.n_features();
    let m = ((cfg.feature_frac * p as f64).ceil() as usize).clamp(1, p);
    let trees: Vec<Tree<T>> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let leaf = |rows: &[usize]| {
                let pos: T = rows.iter().map(|&i| y[i]).sum();
                pos / T::count(rows.len().max(1))
            };
            let spec = GrowSpec {
                features: ds.features(),
                targets: &y,
                criterion: Criterion::Gini,
                max_depth: cfg.max_depth,
                leaf_value: &leaf,
            };
            let mut pick = || {
                let mut f = rand::seq::index::sample(&mut rng, p, m).into_vec();
                f.sort_unstable();
                f
            };
            grow(&spec, rows, &mut pick)
        })
        .collect();
    Ok(ClassifierModel::new(
        ModelConfig::RandomForest(cfg),
        ModelParams::Forest { trees },
    ))
}
