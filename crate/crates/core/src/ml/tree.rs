use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "snake_case")]
pub enum Node<T = f64> {
    Leaf {
        value: T,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T = f64> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf(value: T) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Criterion {
    /// Weighted Gini impurity on 0/1 targets.
    Gini,
    SquaredError,
}

/// Running sums over the targets of one side of a split.
#[derive(Clone, Copy)]
struct Sums<T> {
    n: T,
    s: T,
    ss: T,
}

impl<T: Scalar> Sums<T> {
    fn zero() -> Self {
        Self {
            n: T::zero(),
            s: T::zero(),
            ss: T::zero(),
        }
    }

    fn add(&mut self, t: T) {
        self.n += T::one();
        self.s += t;
        self.ss += t * t;
    }

    fn sub(&mut self, t: T) {
        self.n -= T::one();
        self.s -= t;
        self.ss -= t * t;
    }

    /// `n * impurity` of this side.
    fn cost(&self, c: Criterion) -> T {
        if self.n <= T::zero() {
            return T::zero();
        }
        match c {
            Criterion::Gini => T::lit(2.0) * self.s * (self.n - self.s) / self.n,
            Criterion::SquaredError => (self.ss - self.s * self.s / self.n).max(T::zero()),
        }
    }
}

pub(super) struct GrowSpec<'a, T> {
    pub features: &'a [Vec<T>],
    pub targets: &'a [T],
    pub criterion: Criterion,
    pub max_depth: usize,
    pub leaf_value: &'a dyn Fn(&[usize]) -> T,
}

/// Grow a tree on the (possibly repeated) row indices `rows`. `candidates`
/// returns the features to consider at each split, in ascending order.
pub(super) fn grow<T: Scalar>(
    spec: &GrowSpec<'_, T>,
    rows: Vec<usize>,
    candidates: &mut dyn FnMut() -> Vec<usize>,
) -> Tree<T> {
    let mut nodes = Vec::new();
    grow_node(spec, rows, 0, candidates, &mut nodes);
    Tree { nodes }
}

fn grow_node<T: Scalar>(
    spec: &GrowSpec<'_, T>,
    rows: Vec<usize>,
    depth: usize,
    candidates: &mut dyn FnMut() -> Vec<usize>,
    nodes: &mut Vec<Node<T>>,
) -> usize {
    let id = nodes.len();
    nodes.push(Node::Leaf {
        value: (spec.leaf_value)(&rows),
    });
    if depth >= spec.max_depth || rows.len() < 2 {
        return id;
    }
    let Some((feature, threshold)) = best_split(spec, &rows, &candidates()) else {
        return id;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&i| spec.features[i][feature] <= threshold);
    let left = grow_node(spec, l, depth + 1, candidates, nodes);
    let right = grow_node(spec, r, depth + 1, candidates, nodes);
    nodes[id] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    id
}

/// Midpoint thresholds between consecutive distinct values; strictly lower
/// cost wins, so ties resolve to the lowest feature, then lowest threshold.
fn best_split<T: Scalar>(
    spec: &GrowSpec<'_, T>,
    rows: &[usize],
    feats: &[usize],
) -> Option<(usize, T)> {
    let mut total = Sums::zero();
    for &i in rows {
        total.add(spec.targets[i]);
    }
    let parent = total.cost(spec.criterion);
    if parent <= T::zero() {
        return None;
    }
    let tol = T::lit(1e-12) * (T::one() + parent.abs());
    let mut best: Option<(T, usize, T)> = None;
    let mut order = rows.to_vec();
    for &f in feats {
        order.sort_by(|&a, &b| {
            spec.features[a][f]
                .partial_cmp(&spec.features[b][f])
                .unwrap_or(Ordering::Equal)
        });
        let mut left = Sums::zero();
        let mut right = total;
        for k in 0..order.len() - 1 {
            let t = spec.targets[order[k]];
            left.add(t);
            right.sub(t);
            let (a, b) = (spec.features[order[k]][f], spec.features[order[k + 1]][f]);
            if a == b {
                continue;
            }
            let cost = left.cost(spec.criterion) + right.cost(spec.criterion);
            if cost < parent - tol && best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, f, (a + b) / T::lit(2.0)));
            }
        }
    }
    best.map(|(_, f, thr)| (f, thr))
}

fn fraction_positive<T: Scalar>(targets: &[T], rows: &[usize]) -> T {
    if rows.is_empty() {
        return T::zero();
    }
    rows.iter().map(|&i| targets[i]).sum::<T>() / T::count(rows.len())
}

pub(super) fn label_targets<T: Scalar>(ds: &Dataset<T>) -> Vec<T> {
    ds.labels()
        .iter()
        .map(|&y| if y { T::one() } else { T::zero() })
        .collect()
}

/// Gini tree on every row and feature; leaves hold the positive fraction.
pub fn fit_classification_tree<T: Scalar>(ds: &Dataset<T>, max_depth: usize) -> Tree<T> {
    let targets = label_targets(ds);
    let leaf = |rows: &[usize]| fraction_positive(&targets, rows);
    let spec = GrowSpec {
        features: ds.features(),
        targets: &targets,
        criterion: Criterion::Gini,
        max_depth,
        leaf_value: &leaf,
    };
    let all: Vec<usize> = (0..ds.n_features()).collect();
    grow(&spec, (0..ds.len()).collect(), &mut || all.clone())
}

/// Squared-error tree on `targets`; leaves hold their mean.
pub fn fit_regression_tree<T: Scalar>(
    features: &[Vec<T>],
    targets: &[T],
    max_depth: usize,
) -> Tree<T> {
    let leaf = |rows: &[usize]| fraction_positive(targets, rows);
    let spec = GrowSpec {
        features,
        targets,
        criterion: Criterion::SquaredError,
        max_depth,
        leaf_value: &leaf,
    };
    let n_features = features.first().map_or(0, Vec::len);
    let all: Vec<usize> = (0..n_features).collect();
    grow(&spec, (0..targets.len()).collect(), &mut || all.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MonthDate;

    fn ds(rows: &[[f64; 2]], ys: &[bool]) -> Dataset<f64> {
        Dataset::new(
            rows.iter().map(|r| r.to_vec()).collect(),
            ys.to_vec(),
            (0..rows.len())
                .map(|i| MonthDate::ym(2000, 1).add_months(i as i64))
                .collect(),
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn stump_on_threshold_data() {
        let d = ds(
            &[[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]],
            &[false, false, true, true],
        );
        let t = fit_classification_tree(&d, 1);
        assert_eq!(
            t.nodes()[0],
            Node::Split {
                feature: 0,
                threshold: 1.5,
                left: 1,
                right: 2
            }
        );
        assert_eq!(t.predict(&[0.5, 0.0]), 0.0);
        assert_eq!(t.predict(&[2.5, 0.0]), 1.0);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let d = ds(&[[0.0, 0.0], [1.0, 1.0]], &[false, true]);
        let t = fit_classification_tree(&d, 3);
        assert!(matches!(t.nodes()[0], Node::Split { feature: 0, .. }));
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn pure_or_constant_nodes_stay_leaves() {
        let pure = ds(&[[0.0, 0.0], [1.0, 1.0]], &[true, true]);
        assert_eq!(fit_classification_tree(&pure, 4).nodes().len(), 1);
        let flat = ds(&[[1.0, 1.0], [1.0, 1.0]], &[true, false]);
        assert_eq!(fit_classification_tree(&flat, 4).predict(&[1.0, 1.0]), 0.5);
    }

    #[test]
    fn depth_is_capped() {
        let rows: Vec<[f64; 2]> = (0..16).map(|i| [i as f64, 0.0]).collect();
        let ys: Vec<bool> = (0..16).map(|i| i % 2 == 0).collect();
        assert!(fit_classification_tree(&ds(&rows, &ys), 2).depth() <= 2);
    }

    #[test]
    fn regression_tree_means() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let t = fit_regression_tree(&x, &[1.0, 1.0, 3.0, 5.0], 1);
        assert_eq!(t.predict(&[0.0]), 1.0);
        assert_eq!(t.predict(&[3.0]), 4.0);
    }
}
