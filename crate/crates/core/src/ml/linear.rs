use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::model::{ClassifierModel, ModelConfig, ModelParams};
use crate::error::Result;
use crate::scalar::{sigmoid, softplus, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub lr: f64,
    pub iters: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            iters: 5000,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub iters: usize,
    /// Step at iteration `t` is `lr / sqrt(t + 1)`.
    pub lr: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            iters: 5000,
            lr: 0.1,
        }
    }
}

fn dot<T: Scalar>(w: &[T], x: &[T]) -> T {
    w.iter().zip(x).map(|(&a, &b)| a * b).sum()
}

/// Mean logistic loss plus `l2 * |w|^2`.
pub fn logistic_loss<T: Scalar>(ds: &Dataset<T>, w: &[T], b: T, l2: T) -> T {
    let n = T::count(ds.len());
    let data: T = ds
        .features()
        .iter()
        .zip(ds.labels())
        .map(|(x, &y)| {
            let z = dot(w, x) + b;
            // log(1 + e^z) - y z
            softplus(z) - if y { z } else { T::zero() }
        })
        .sum();
    data / n + l2 * dot(w, w)
}

/// Analytic gradient of [`logistic_loss`] as `(dw, db)`.
pub fn logistic_gradient<T: Scalar>(ds: &Dataset<T>, w: &[T], b: T, l2: T) -> (Vec<T>, T) {
    let n = T::count(ds.len());
    let mut gw = vec![T::zero(); w.len()];
    let mut gb = T::zero();
    for (x, &y) in ds.features().iter().zip(ds.labels()) {
        let r = sigmoid(dot(w, x) + b) - if y { T::one() } else { T::zero() };
        for (g, &xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    let two = T::lit(2.0);
    for (g, &wi) in gw.iter_mut().zip(w) {
        *g = *g / n + two * l2 * wi;
    }
    (gw, gb / n)
}

/// Full-batch gradient descent from zero.
pub fn train_logreg<T: Scalar>(ds: &Dataset<T>, cfg: LogRegConfig) -> Result<ClassifierModel<T>> {
    ds.require_both_classes("training set")?;
    let (lr, l2) = (T::lit(cfg.lr), T::lit(cfg.l2));
    let mut w = vec![T::zero(); ds.n_features()];
    let mut b = T::zero();
    for _ in 0..cfg.iters {
        let (gw, gb) = logistic_gradient(ds, &w, b, l2);
        for (wi, g) in w.iter_mut().zip(gw) {
            *wi -= lr * g;
        }
        b -= lr * gb;
    }
    Ok(ClassifierModel::new(
        ModelConfig::Logreg(cfg),
        ModelParams::Linear {
            weights: w,
            bias: b,
        },
    ))
}

/// Subgradient descent on mean hinge loss plus `|w|^2 / c`, labels in {-1, +1}.
pub fn train_linear_svm<T: Scalar>(ds: &Dataset<T>, cfg: SvmConfig) -> Result<ClassifierModel<T>> {
    ds.require_both_classes("training set")?;
    if cfg.c.is_nan() || cfg.c <= 0.0 {
        return Err(crate::Error::InvalidArgument(
            "svm c must be positive".into(),
        ));
    }
    let n = T::count(ds.len());
    let reg = T::lit(2.0 / cfg.c);
    let mut w = vec![T::zero(); ds.n_features()];
    let mut b = T::zero();
    for t in 0..cfg.iters {
        let step = T::lit(cfg.lr / ((t + 1) as f64).sqrt());
        let mut gw: Vec<T> = w.iter().map(|&wi| reg * wi).collect();
        let mut gb = T::zero();
        for (x, &y) in ds.features().iter().zip(ds.labels()) {
            let ys = if y { T::one() } else { -T::one() };
            if ys * (dot(&w, x) + b) < T::one() {
                for (g, &xi) in gw.iter_mut().zip(x) {
                    *g -= ys * xi / n;
                }
                gb -= ys / n;
            }
        }
        for (wi, g) in w.iter_mut().zip(gw) {
            *wi -= step * g;
        }
        b -= step * gb;
    }
    Ok(ClassifierModel::new(
        ModelConfig::LinearSvm(cfg),
        ModelParams::Linear {
            weights: w,
            bias: b,
        },
    ))
}

pub(super) fn linear_score<T: Scalar>(w: &[T], b: T, x: &[T]) -> T {
    dot(w, x) + b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MonthDate;

    pub(crate) fn ds(xs: &[f64], ys: &[bool]) -> Dataset<f64> {
        Dataset::new(
            xs.iter().map(|&x| vec![x]).collect(),
            ys.to_vec(),
            (0..xs.len())
                .map(|i| MonthDate::ym(2000, 1).add_months(i as i64))
                .collect(),
            vec!["x".into()],
        )
        .unwrap()
    }

    fn separable() -> Dataset<f64> {
        ds(
            &[-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0],
            &[false, false, false, false, true, true, true, true],
        )
    }

    #[test]
    fn gradient_at_origin() {
        let d = ds(&[1.0, 2.0, 3.0, 4.0], &[true, false, true, false]);
        let (gw, gb) = logistic_gradient(&d, &[0.0], 0.0, 0.0);
        let expect: f64 = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .zip([true, false, true, false])
            .map(|(x, y)| (0.5 - if y { 1.0 } else { 0.0 }) * x)
            .sum::<f64>()
            / 4.0;
        assert!((gw[0] - expect).abs() < 1e-15);
        assert!(gb.abs() < 1e-15);
    }

    #[test]
    fn logreg_separates() {
        let m = train_logreg(
            &separable(),
            LogRegConfig {
                l2: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        for (x, &y) in separable().features().iter().zip(separable().labels()) {
            assert_eq!(m.predict_proba(x) > 0.5, y);
        }
    }

    #[test]
    fn svm_separates() {
        let m = train_linear_svm(&separable(), SvmConfig::default()).unwrap();
        for (x, &y) in separable().features().iter().zip(separable().labels()) {
            assert_eq!(m.score(x) > 0.0, y);
        }
    }

    #[test]
    fn svm_without_signal_predicts_majority() {
        let d = ds(&[1.0; 6], &[true, false, false, false, true, false]);
        let m = train_linear_svm(&d, SvmConfig::default()).unwrap();
        let ModelParams::Linear { weights, .. } = m.params() else {
            unreachable!()
        };
        assert!(weights[0].abs() < 0.05);
        assert!(m.score(&[1.0]) < 0.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let d = ds(&[1.0, 2.0], &[true, true]);
        assert!(matches!(
            train_logreg(&d, LogRegConfig::default()),
            Err(crate::Error::DegenerateDataset(_))
        ));
        assert!(train_linear_svm(&d, SvmConfig::default()).is_err());
    }
}
