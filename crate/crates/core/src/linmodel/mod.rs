//! One-vs-rest linear classifiers: logistic regression (L1 or L2), linear SVM
//! with squared hinge, and multinomial naive Bayes.

mod nb;
pub mod solver;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::sparse::CsrMatrix;

pub use nb::{fit_multinomial_nb, fit_multinomial_nb_for};
pub use solver::{sigmoid, soft_threshold, BinaryFit, BinaryLoss, BinaryProblem, Regularizer};

/// Version written into every serialized model.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LinError {
    #[error("training labels contain a single class; need at least two")]
    SingleClass,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature matrix has {found} columns, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    Empty,
    #[error("class {0} has no training rows")]
    EmptyClass(Label),
    #[error("naive Bayes needs non-negative features; found {value} at row {row}")]
    NegativeFeature { row: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("model has non-finite weights")]
    NonFinite,
    #[error("model format version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Logistic,
    SquaredHinge,
    NaiveBayes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L1,
    L2,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    #[default]
    Uniform,
    Balanced,
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
            Penalty::None => "none",
        })
    }
}

impl std::fmt::Display for ClassWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassWeight::Uniform => "uniform",
            ClassWeight::Balanced => "balanced",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-4,
            max_iter: 1000,
            seed: 42,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format_version: u32,
    /// Class order of the rows of `weights`; sorted by class code.
    pub classes: Vec<Label>,
    pub loss: Loss,
    pub penalty: Penalty,
    /// Inverse regularization strength; the smoothing alpha for naive Bayes.
    pub c: f64,
    pub class_weight: ClassWeight,
    /// K rows of D weights.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Column count expected at prediction time, before projection.
    pub input_dim: usize,
    /// Columns kept from the input, if a projection is applied first.
    pub selected_columns: Option<Vec<usize>>,
    pub train_meta: Vec<TrainMeta>,
}

/// Sorted distinct classes, checked against `x`.
fn training_classes(x: &CsrMatrix, y: &[Label]) -> Result<Vec<Label>, LinError> {
    if y.len() != x.n_rows() {
        return Err(LinError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if y.is_empty() {
        return Err(LinError::Empty);
    }
    let mut classes = y.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(LinError::SingleClass);
    }
    Ok(classes)
}

/// Per-row weights: 1, or `n / (K * n_class)` when balanced.
pub fn sample_weights(y: &[Label], classes: &[Label], class_weight: ClassWeight) -> Vec<f64> {
    match class_weight {
        ClassWeight::Uniform => vec![1.0; y.len()],
        ClassWeight::Balanced => {
            let n = y.len() as f64;
            let k = classes.len() as f64;
            let mut counts = [0usize; 3];
            for l in y {
                counts[l.index()] += 1;
            }
            y.iter()
                .map(|l| n / (k * counts[l.index()] as f64))
                .collect()
        }
    }
}

fn check_c(c: f64) -> Result<(), LinError> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(LinError::BadParameter(format!(
            "C must be positive, got {c}"
        )))
    }
}

fn fit_ovr(
    x: &CsrMatrix,
    y: &[Label],
    loss: BinaryLoss,
    reg: Regularizer,
    c: f64,
    class_weight: ClassWeight,
    opts: SolverOptions,
) -> Result<LinearModel, LinError> {
    check_c(c)?;
    let classes = training_classes(x, y)?;
    let omega = sample_weights(y, &classes, class_weight);
    let fits: Vec<BinaryFit> = classes
        .par_iter()
        .enumerate()
        .map(|(k, &class)| {
            let z: Vec<f64> = y
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let problem = BinaryProblem {
                x,
                z: &z,
                omega: &omega,
                c,
                loss,
                reg,
            };
            solver::solve(
                &problem,
                opts.tol,
                opts.max_iter,
                opts.seed.wrapping_add(k as u64),
            )
        })
        .collect();
    for (class, fit) in classes.iter().zip(&fits) {
        if !fit.converged {
            log::warn!(
                "{class} vs rest did not converge in {} iterations (objective {:.6})",
                fit.iterations,
                fit.objective
            );
        }
    }
    let model = LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        classes,
        loss: match loss {
            BinaryLoss::Logistic => Loss::Logistic,
            BinaryLoss::SquaredHinge => Loss::SquaredHinge,
        },
        penalty: match reg {
            Regularizer::L1 => Penalty::L1,
            Regularizer::L2 => Penalty::L2,
        },
        c,
        class_weight,
        train_meta: fits
            .iter()
            .map(|f| TrainMeta {
                iterations: f.iterations,
                objective: f.objective,
                converged: f.converged,
            })
            .collect(),
        bias: fits.iter().map(|f| f.b).collect(),
        weights: fits.into_iter().map(|f| f.w).collect(),
        input_dim: x.n_cols(),
        selected_columns: None,
    };
    model.check_finite()?;
    Ok(model)
}

/// One-vs-rest logistic regression with an L1 or L2 penalty.
pub fn fit_logreg(
    x: &CsrMatrix,
    y: &[Label],
    penalty: Penalty,
    c: f64,
    class_weight: ClassWeight,
    opts: SolverOptions,
) -> Result<LinearModel, LinError> {
    let reg = match penalty {
        Penalty::L1 => Regularizer::L1,
        Penalty::L2 => Regularizer::L2,
        Penalty::None => {
            return Err(LinError::BadParameter(
                "logistic regression needs an l1 or l2 penalty".into(),
            ))
        }
    };
    fit_ovr(x, y, BinaryLoss::Logistic, reg, c, class_weight, opts)
}

/// One-vs-rest linear SVM: squared hinge loss with an L2 penalty.
pub fn fit_linear_svm(
    x: &CsrMatrix,
    y: &[Label],
    c: f64,
    class_weight: ClassWeight,
    opts: SolverOptions,
) -> Result<LinearModel, LinError> {
    fit_ovr(
        x,
        y,
        BinaryLoss::SquaredHinge,
        Regularizer::L2,
        c,
        class_weight,
        opts,
    )
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl LinearModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Feature count after projection.
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn converged(&self) -> bool {
        self.train_meta.iter().all(|m| m.converged)
    }

    /// Declares that the model was fitted on `columns` of a `input_dim`-wide
    /// matrix; prediction inputs are projected before scoring.
    pub fn set_projection(
        &mut self,
        columns: Vec<usize>,
        input_dim: usize,
    ) -> Result<(), LinError> {
        if columns.len() != self.dim() {
            return Err(LinError::DimensionMismatch {
                expected: self.dim(),
                found: columns.len(),
            });
        }
        if !columns.windows(2).all(|w| w[0] < w[1])
            || columns.last().is_some_and(|&c| c >= input_dim)
        {
            return Err(LinError::BadParameter(
                "projection columns must be sorted and in range".into(),
            ));
        }
        self.selected_columns = Some(columns);
        self.input_dim = input_dim;
        Ok(())
    }

    fn check_finite(&self) -> Result<(), LinError> {
        let finite = self
            .weights
            .iter()
            .flatten()
            .chain(&self.bias)
            .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(LinError::NonFinite)
        }
    }

    fn project(&self, x: &CsrMatrix) -> Result<Option<CsrMatrix>, LinError> {
        if x.n_cols() != self.input_dim {
            return Err(LinError::DimensionMismatch {
                expected: self.input_dim,
                found: x.n_cols(),
            });
        }
        Ok(self
            .selected_columns
            .as_ref()
            .map(|cols| x.select_columns(cols)))
    }

    /// Per-class scores, n rows by K columns in `classes` order: sigmoid
    /// probabilities for logistic models, raw margins for the SVM, and
    /// log-posteriors for naive Bayes.
    pub fn predict_scores(&self, x: &CsrMatrix) -> Result<Vec<Vec<f64>>, LinError> {
        let projected = self.project(x)?;
        let x = projected.as_ref().unwrap_or(x);
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let raw: Vec<f64> = self
                    .weights
                    .iter()
                    .zip(&self.bias)
                    .map(|(w, b)| x.row_dot(i, w) + b)
                    .collect();
                match self.loss {
                    Loss::Logistic => raw.into_iter().map(sigmoid).collect(),
                    Loss::SquaredHinge => raw,
                    Loss::NaiveBayes => {
                        let z = log_sum_exp(&raw);
                        raw.into_iter().map(|v| v - z).collect()
                    }
                }
            })
            .collect())
    }

    /// Scores rescaled so each row sums to 1: logistic scores divided by their
    /// sum, naive Bayes posteriors exponentiated, SVM margins passed through a
    /// softmax.
    pub fn predict_normalized(&self, x: &CsrMatrix) -> Result<Vec<Vec<f64>>, LinError> {
        let scores = self.predict_scores(x)?;
        Ok(scores
            .into_iter()
            .map(|row| normalize_row(self.loss, row))
            .collect())
    }

    pub fn predict(&self, x: &CsrMatrix) -> Result<Vec<Label>, LinError> {
        Ok(self
            .predict_scores(x)?
            .iter()
            .map(|row| self.classes[argmax(row)])
            .collect())
    }

    pub fn to_json(&self) -> Result<String, LinError> {
        self.check_finite()?;
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, LinError> {
        let model: LinearModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    /// Structural checks applied after loading.
    pub fn validate(&self) -> Result<(), LinError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(LinError::Version {
                expected: MODEL_FORMAT_VERSION,
                found: self.format_version,
            });
        }
        let k = self.classes.len();
        let d = self.dim();
        let shapes_ok = k >= 2
            && self.weights.len() == k
            && self.bias.len() == k
            && self.train_meta.len() == k
            && self.weights.iter().all(|w| w.len() == d)
            && self.classes.windows(2).all(|w| w[0] < w[1]);
        let projection_ok = match &self.selected_columns {
            Some(cols) => {
                cols.len() == d
                    && cols.windows(2).all(|w| w[0] < w[1])
                    && cols.iter().all(|&c| c < self.input_dim)
            }
            None => self.input_dim == d,
        };
        if !shapes_ok || !projection_ok {
            return Err(LinError::BadParameter("inconsistent model shape".into()));
        }
        self.check_finite()
    }

    pub fn save(&self, path: &Path) -> Result<(), LinError> {
        std::fs::write(path, self.to_json()?).map_err(|source| LinError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LinError> {
        let text = std::fs::read_to_string(path).map_err(|source| LinError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Index of the largest score; exact ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

fn normalize_row(loss: Loss, row: Vec<f64>) -> Vec<f64> {
    match loss {
        Loss::Logistic => {
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        }
        Loss::NaiveBayes | Loss::SquaredHinge => {
            let z = log_sum_exp(&row);
            row.into_iter().map(|v| (v - z).exp()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn hand_model(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> LinearModel {
        let k = weights.len();
        LinearModel {
            format_version: MODEL_FORMAT_VERSION,
            classes: Label::ALL[..k].to_vec(),
            loss: Loss::Logistic,
            penalty: Penalty::L2,
            c: 1.0,
            class_weight: ClassWeight::Uniform,
            input_dim: weights[0].len(),
            weights,
            bias,
            selected_columns: None,
            train_meta: vec![
                TrainMeta {
                    iterations: 0,
                    objective: 0.0,
                    converged: true
                };
                k
            ],
        }
    }

    #[test]
    fn zero_model_scores_one_half() {
        let m = hand_model(vec![vec![0.0; 2]; 3], vec![0.0; 3]);
        let x = CsrMatrix::from_dense(&[vec![1.0, -2.0], vec![0.0, 0.0]]);
        for row in m.predict_scores(&x).unwrap() {
            assert_eq!(row, vec![0.5; 3]);
        }
        assert_eq!(m.predict(&x).unwrap(), vec![Hate, Hate]);
    }

    #[test]
    fn hand_set_weights() {
        let m = hand_model(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0]);
        let x = CsrMatrix::from_dense(&[vec![2.0, 0.0]]);
        let s = m.predict_scores(&x).unwrap();
        assert!((s[0][0] - 0.880797).abs() < 1e-6);
        let n = m.predict_normalized(&x).unwrap();
        assert!((n[0].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn argmax_ties_go_to_smallest_code() {
        assert_eq!(argmax(&[0.5, 0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.9, 0.2]), 1);
        assert_eq!(argmax(&[0.1, 0.9, 0.9]), 1);
    }

    #[test]
    fn zero_column_with_zero_weight_changes_nothing() {
        let m = hand_model(
            vec![vec![1.0, -1.0], vec![-0.5, 2.0], vec![0.3, 0.3]],
            vec![0.1, -0.2, 0.0],
        );
        let mut wide = m.clone();
        for w in &mut wide.weights {
            w.push(0.0);
        }
        wide.input_dim = 3;
        let x = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, -3.0]]);
        let xw = CsrMatrix::from_dense(&[
            vec![1.0, 2.0, 0.0],
            vec![-1.0, 0.5, 0.0],
            vec![3.0, -3.0, 0.0],
        ]);
        assert_eq!(
            m.predict_scores(&x).unwrap(),
            wide.predict_scores(&xw).unwrap()
        );
        assert_eq!(m.predict(&x).unwrap(), wide.predict(&xw).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = hand_model(vec![vec![0.0; 2]; 3], vec![0.0; 3]);
        let x = CsrMatrix::from_dense(&[vec![1.0, 2.0, 3.0]]);
        assert!(matches!(
            m.predict(&x),
            Err(LinError::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn projection_is_applied_before_scoring() {
        let mut m = hand_model(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]);
        m.set_projection(vec![2], 4).unwrap();
        let x = CsrMatrix::from_dense(&[vec![9.0, 9.0, 1.0, 9.0], vec![9.0, 9.0, -1.0, 9.0]]);
        assert_eq!(m.predict(&x).unwrap(), vec![Hate, Offensive]);
        assert!(m.set_projection(vec![1, 0], 4).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = hand_model(
            vec![
                vec![0.1 + 0.2, -1e-300, 1.0 / 3.0],
                vec![f64::MIN_POSITIVE, 2.5e17, -0.7],
            ],
            vec![std::f64::consts::PI, -std::f64::consts::E],
        );
        let back = LinearModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), m.to_json().unwrap());
    }

    #[test]
    fn load_rejects_wrong_version_and_nan() {
        let mut m = hand_model(vec![vec![1.0], vec![2.0]], vec![0.0, 0.0]);
        m.format_version = 99;
        let text = serde_json::to_string(&m).unwrap();
        assert!(matches!(
            LinearModel::from_json(&text),
            Err(LinError::Version { .. })
        ));
        let mut m = hand_model(vec![vec![1.0], vec![2.0]], vec![0.0, 0.0]);
        m.weights[0][0] = f64::NAN;
        assert!(matches!(m.to_json(), Err(LinError::NonFinite)));
    }

    #[test]
    fn fit_rejects_bad_input() {
        let x = CsrMatrix::from_dense(&[vec![1.0], vec![2.0]]);
        let opts = SolverOptions::default();
        assert!(matches!(
            fit_logreg(
                &x,
                &[Hate, Hate],
                Penalty::L2,
                1.0,
                ClassWeight::Uniform,
                opts
            ),
            Err(LinError::SingleClass)
        ));
        assert!(matches!(
            fit_logreg(&x, &[Hate], Penalty::L2, 1.0, ClassWeight::Uniform, opts),
            Err(LinError::LengthMismatch { .. })
        ));
        assert!(fit_logreg(
            &x,
            &[Hate, Neither],
            Penalty::L2,
            0.0,
            ClassWeight::Uniform,
            opts
        )
        .is_err());
        assert!(fit_logreg(
            &x,
            &[Hate, Neither],
            Penalty::None,
            1.0,
            ClassWeight::Uniform,
            opts
        )
        .is_err());
    }

    #[test]
    fn balanced_weights_sum_to_n() {
        let y = [Hate, Offensive, Offensive, Offensive, Neither, Neither];
        let w = sample_weights(&y, &Label::ALL, ClassWeight::Balanced);
        assert!((w.iter().sum::<f64>() - 6.0).abs() < 1e-12);
        assert!((w[0] - 2.0).abs() < 1e-12);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
    }
}
