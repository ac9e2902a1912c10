//! Evaluation and compression metrics: accuracy, F1, MSE, AUC, parameter
//! reduction and compression ratios.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DenseNetwork;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    /// Positive-class F1, binary tasks only.
    pub binary_f1: Option<f64>,
    /// Rank-statistic AUC, binary tasks only.
    pub auc: Option<f64>,
    /// confusion[target][predicted]
    pub confusion: Vec<Vec<usize>>,
}

/// Argmax-decision classification metrics. Scores are one row per example
/// (e.g. softmax outputs); labels are class ids.
pub fn classification_metrics(
    scores: &Array2<f64>,
    labels: &[usize],
) -> Result<ClassificationMetrics> {
    let n = scores.nrows();
    let nc = scores.ncols();
    if nc < 2 {
        return Err(Error::Metrics(format!("need at least 2 classes, got {nc}")));
    }
    if n == 0 || labels.len() != n {
        return Err(Error::Metrics(format!(
            "{} label(s) for {n} score row(s)",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= nc) {
        return Err(Error::Metrics(format!("label id {bad} >= class count {nc}")));
    }

    let mut confusion = vec![vec![0usize; nc]; nc];
    for (row, &label) in scores.rows().into_iter().zip(labels) {
        let mut pred = 0;
        for (j, v) in row.iter().enumerate() {
            if *v > row[pred] {
                pred = j;
            }
        }
        confusion[label][pred] += 1;
    }

    let correct: usize = (0..nc).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / n as f64;

    // per-class F1 with the 0/0 -> 0 convention
    let mut per_class_f1 = Vec::with_capacity(nc);
    for c in 0..nc {
        let tp = confusion[c][c];
        let fp: usize = (0..nc).filter(|&t| t != c).map(|t| confusion[t][c]).sum();
        let fn_: usize = (0..nc).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
        let denom = 2 * tp + fp + fn_;
        per_class_f1.push(if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        });
    }
    let macro_f1 = per_class_f1.iter().sum::<f64>() / nc as f64;

    let (binary_f1, auc) = if nc == 2 {
        let positive: Vec<f64> = scores.column(1).to_vec();
        let auc = binary_auc_from_scores(&positive, labels).ok();
        (Some(per_class_f1[1]), auc)
    } else {
        (None, None)
    };

    Ok(ClassificationMetrics {
        accuracy,
        macro_f1,
        per_class_f1,
        binary_f1,
        auc,
        confusion,
    })
}

/// Binary AUC via the Mann-Whitney rank statistic; ties contribute 1/2.
/// Errors on non-binary score matrices or single-class label sets.
pub fn binary_auc(scores: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    if scores.ncols() != 2 {
        return Err(Error::Metrics(format!(
            "AUC is only defined for binary tasks here, got {} classes",
            scores.ncols()
        )));
    }
    binary_auc_from_scores(&scores.column(1).to_vec(), labels)
}

fn binary_auc_from_scores(positive_scores: &[f64], labels: &[usize]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metrics("AUC undefined: only one class present".into()));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| positive_scores[a].partial_cmp(&positive_scores[b]).unwrap());
    // average ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len()
            && positive_scores[order[j + 1]] == positive_scores[order[i]]
        {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mse: f64,
    pub mae: f64,
}

pub fn regression_metrics(preds: &Array2<f64>, targets: &Array2<f64>) -> Result<RegressionMetrics> {
    if preds.dim() != targets.dim() || preds.nrows() == 0 {
        return Err(Error::Metrics(format!(
            "prediction shape {:?} does not match target shape {:?}",
            preds.dim(),
            targets.dim()
        )));
    }
    let diff = preds - targets;
    let count = diff.len() as f64;
    Ok(RegressionMetrics {
        mse: diff.iter().map(|v| v * v).sum::<f64>() / count,
        mae: diff.iter().map(|v| v.abs()).sum::<f64>() / count,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressionReport {
    pub original_params: usize,
    pub pruned_params: usize,
    pub reduction_percent: f64,
    /// preserved / original, lower is better
    pub compression_ratio: f64,
    /// fraction of weights (bias excluded) remaining
    pub sparseness: f64,
    /// original / preserved, the "Nx" factor
    pub pruning_performance: f64,
}

pub fn compression_report(
    original: &DenseNetwork,
    pruned: &DenseNetwork,
) -> Result<CompressionReport> {
    let op = original.param_count();
    let pp = pruned.param_count();
    if pp > op {
        return Err(Error::Metrics(format!(
            "pruned network has more parameters ({pp}) than the original ({op})"
        )));
    }
    Ok(CompressionReport {
        original_params: op,
        pruned_params: pp,
        reduction_percent: 100.0 * (1.0 - pp as f64 / op as f64),
        compression_ratio: pp as f64 / op as f64,
        sparseness: pruned.weight_count() as f64 / original.weight_count() as f64,
        pruning_performance: op as f64 / pp as f64,
    })
}
