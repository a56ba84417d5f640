use super::{
    training_classes, ClassWeight, LinError, LinearModel, Loss, Penalty, TrainMeta,
    MODEL_FORMAT_VERSION,
};
use crate::corpus::Label;
use crate::sparse::CsrMatrix;

/// Smallest alpha used; an alpha of zero would give `ln 0` for unseen features.
const MIN_ALPHA: f64 = 1e-10;

/// Multinomial naive Bayes over the classes present in `y`.
pub fn fit_multinomial_nb(x: &CsrMatrix, y: &[Label], alpha: f64) -> Result<LinearModel, LinError> {
    let classes = training_classes(x, y)?;
    fit_multinomial_nb_for(x, y, &classes, alpha)
}

/// Multinomial naive Bayes over an explicit class list; a listed class with
/// no rows is an error.
///
/// Weights are `ln((N_kj + alpha) / (N_k + alpha * D))` and biases are log
/// class priors.
pub fn fit_multinomial_nb_for(
    x: &CsrMatrix,
    y: &[Label],
    classes: &[Label],
    alpha: f64,
) -> Result<LinearModel, LinError> {
    if y.len() != x.n_rows() {
        return Err(LinError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(LinError::BadParameter(format!(
            "alpha must be a finite non-negative number, got {alpha}"
        )));
    }
    let mut classes = classes.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(LinError::SingleClass);
    }
    let alpha = alpha.max(MIN_ALPHA);
    let d = x.n_cols();
    let mut counts = vec![vec![0.0; d]; classes.len()];
    let mut docs = vec![0usize; classes.len()];
    for (i, label) in y.iter().enumerate() {
        let Some(k) = classes.iter().position(|c| c == label) else {
            return Err(LinError::BadParameter(format!(
                "label {label} is not among the model classes"
            )));
        };
        docs[k] += 1;
        let (idx, vals) = x.row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            if v < 0.0 {
                return Err(LinError::NegativeFeature { row: i, value: v });
            }
            counts[k][j] += v;
        }
    }
    if let Some(k) = docs.iter().position(|&n| n == 0) {
        return Err(LinError::EmptyClass(classes[k]));
    }
    let n = y.len() as f64;
    let weights: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * d as f64;
            row.iter().map(|&c| ((c + alpha) / total).ln()).collect()
        })
        .collect();
    let model = LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        loss: Loss::NaiveBayes,
        penalty: Penalty::None,
        c: alpha,
        class_weight: ClassWeight::Uniform,
        bias: docs.iter().map(|&m| (m as f64 / n).ln()).collect(),
        weights,
        input_dim: d,
        selected_columns: None,
        train_meta: vec![
            TrainMeta {
                iterations: 1,
                objective: 0.0,
                converged: true,
            };
            classes.len()
        ],
        classes,
    };
    model.check_finite()?;
    Ok(model)
}
