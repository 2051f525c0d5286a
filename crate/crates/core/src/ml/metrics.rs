use std::cmp::Ordering;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::model::{ClassifierModel, ModelKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simulation::ConfusionMatrix;

/// Undefined metrics (no predicted positives, one class only) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision_recession: Option<f64>,
    pub recall_recession: Option<f64>,
    pub auc: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub predicted_positive: u64,
    pub rows: usize,
    pub threshold: f64,
}

/// Rank-sum AUC with average ranks for ties, i.e.
/// `P(s_pos > s_neg) + 0.5 P(s_pos = s_neg)`. `None` unless both classes occur.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean
        let rank = (i + j + 2) as f64 / 2.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count();
        pos_rank_sum += rank * pos_in_group as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Quadratic pairwise AUC.
pub fn auc_pairwise(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0u64;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1;
            wins += match si.partial_cmp(&sj) {
                Some(Ordering::Greater) => 1.0,
                Some(Ordering::Equal) => 0.5,
                _ => 0.0,
            };
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// Hard predictions are `p >= threshold`; AUC uses the probabilities.
pub fn evaluate<T: Scalar>(
    model: &ClassifierModel<T>,
    ds: &Dataset<T>,
    threshold: f64,
) -> Result<MetricsReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(
            "threshold must lie in [0, 1]".into(),
        ));
    }
    let probs: Vec<f64> = ds
        .features()
        .iter()
        .map(|x| model.predict_proba(x).to_f64_lossy())
        .collect();
    let confusion = ConfusionMatrix::from_predictions(
        ds.labels()
            .iter()
            .zip(&probs)
            .map(|(&y, &p)| (y, p >= threshold)),
    );
    Ok(MetricsReport {
        accuracy: confusion.accuracy(),
        precision_recession: confusion.precision(),
        recall_recession: confusion.recall(),
        auc: auc(&probs, ds.labels()),
        predicted_positive: confusion.predicted_positive(),
        confusion,
        rows: ds.len(),
        threshold,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Aligned text table: model, accuracy, precision, recall, AUC.
pub fn metrics_table(rows: &[(ModelKind, &MetricsReport)]) -> String {
    let header = [
        "Model",
        "Accuracy",
        "Precision (Recession)",
        "Recall (Recession)",
        "AUC",
    ];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|(k, m)| {
            [
                k.display_name().to_string(),
                cell(m.accuracy),
                cell(m.precision_recession),
                cell(m.recall_recession),
                cell(m.auc),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            let sep = if i == 0 { "" } else { "  " };
            if i == 0 {
                let _ = write!(out, "{sep}{c:<w$}");
            } else {
                let _ = write!(out, "{sep}{c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(
        &mut out,
        &rule.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    for r in &body {
        line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_auc() {
        let s = [0.9, 0.4, 0.6, 0.1];
        let y = [true, true, false, false];
        assert_eq!(auc(&s, &y), Some(0.75));
        assert_eq!(auc_pairwise(&s, &y), Some(0.75));
    }

    #[test]
    fn perfect_and_tied() {
        assert_eq!(auc(&[0.9, 0.8, 0.1], &[true, true, false]), Some(1.0));
        assert_eq!(
            auc(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]),
            Some(0.5)
        );
        assert_eq!(auc(&[0.1, 0.2], &[true, true]), None);
    }

    #[test]
    fn table_has_header_rule_and_rows() {
        let m = MetricsReport {
            accuracy: Some(0.865),
            precision_recession: None,
            recall_recession: Some(1.0),
            auc: Some(0.5),
            confusion: ConfusionMatrix::default(),
            predicted_positive: 0,
            rows: 0,
            threshold: 0.5,
        };
        let t = metrics_table(&[(ModelKind::Logreg, &m), (ModelKind::RandomForest, &m)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains("0.8650") && lines[2].contains("n/a"));
        assert_eq!(lines[0].len(), lines[3].len());
    }
}
