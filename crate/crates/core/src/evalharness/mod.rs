//! Stratified folds, cross-validation and grid search, classification
//! metrics, confusion matrices and error reports.

mod report;
mod search;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::pipeline::PipelineError;

pub use report::{
    confusion_csv, error_report, grid_csv, metrics_csv, render_confusion, render_metrics,
    BucketEntry, ErrorBucket, ErrorReport, WeightEntry,
};
pub use search::{
    cross_validate, cv_with, grid_search, prepare_folds, select_best, CvResult, FoldInputs,
    GridRow, GridSearchResult,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need k >= 2 folds, got {0}")]
    BadK(usize),
    #[error("{n} records cannot fill {k} folds")]
    TooFewRecords { n: usize, k: usize },
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("no records to evaluate")]
    Empty,
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: PipelineError,
    },
    #[error("the grid is empty")]
    EmptyGrid,
    #[error("every grid configuration failed:\n{}", .0.join("\n"))]
    AllFailed(Vec<String>),
}

/// Stratified `k`-fold assignment. Each class is shuffled with a seeded RNG
/// and dealt round-robin; the dealing position carries over between classes
/// so overall fold sizes stay within one of each other. Every fold is sorted.
pub fn kfold_indices(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::BadK(k));
    }
    if labels.len() < k {
        return Err(EvalError::TooFewRecords { n: labels.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in Label::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            log::warn!(
                "class {class} has {} records for {k} folds; some folds will lack it",
                members.len()
            );
        }
        members.shuffle(&mut rng);
        for (j, i) in members.iter().enumerate() {
            folds[(offset + j) % k].push(*i);
        }
        offset = (offset + members.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Rows are true classes, columns predicted classes, both in code order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, truth: Label) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn col_sum(&self, predicted: Label) -> u64 {
        self.counts.iter().map(|r| r[predicted.index()]).sum()
    }

    /// Each row divided by its sum; rows of absent classes stay zero.
    pub fn normalized(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in self.counts.iter().enumerate() {
            let s: u64 = row.iter().sum();
            if s > 0 {
                for c in 0..3 {
                    out[r][c] = row[c] as f64 / s as f64;
                }
            }
        }
        out
    }
}

fn check_lengths(y_true: &[Label], y_pred: &[Label]) -> Result<(), EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    check_lengths(y_true, y_pred)?;
    let mut m = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        m.counts[t.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Per-class and support-weighted precision, recall and F1, plus accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: [ClassMetrics; 3],
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub n: u64,
}

impl MetricsReport {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        &self.per_class[label.index()]
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl From<&ConfusionMatrix> for MetricsReport {
    fn from(m: &ConfusionMatrix) -> Self {
        let n = m.total();
        let per_class = Label::ALL.map(|label| {
            let tp = m.counts[label.index()][label.index()];
            let precision = ratio(tp, m.col_sum(label));
            let recall = ratio(tp, m.row_sum(label));
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support: m.row_sum(label),
            }
        });
        let weighted = |f: fn(&ClassMetrics) -> f64| -> f64 {
            per_class
                .iter()
                .map(|c| f(c) * c.support as f64)
                .sum::<f64>()
                / n.max(1) as f64
        };
        MetricsReport {
            weighted_precision: weighted(|c| c.precision),
            weighted_recall: weighted(|c| c.recall),
            weighted_f1: weighted(|c| c.f1),
            accuracy: ratio((0..3).map(|i| m.counts[i][i]).sum(), n),
            per_class,
            n,
        }
    }
}

pub fn metrics(y_true: &[Label], y_pred: &[Label]) -> Result<MetricsReport, EvalError> {
    Ok(MetricsReport::from(&confusion(y_true, y_pred)?))
}
