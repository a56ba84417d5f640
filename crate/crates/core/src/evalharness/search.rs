use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kfold_indices, metrics, EvalError, MetricsReport};
use crate::config::{ModelKind, ModelSpec};
use crate::corpus::Label;
use crate::linmodel::SolverOptions;
use crate::pipeline::{
    fit_projected, fit_spec, FeatureSettings, Featurizer, PipelineError, PreparedDoc, Selection,
};
use crate::sparse::CsrMatrix;
use crate::vectorize::select_l1;

/// Per-fold metrics with the mean and population standard deviation of the
/// weighted F1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_metrics: Vec<MetricsReport>,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_accuracy: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl CvResult {
    fn from_reports(fold_metrics: Vec<MetricsReport>) -> Self {
        let f1: Vec<f64> = fold_metrics.iter().map(|m| m.weighted_f1).collect();
        let acc: Vec<f64> = fold_metrics.iter().map(|m| m.accuracy).collect();
        let (mean_f1, std_f1) = mean_std(&f1);
        CvResult {
            mean_f1,
            std_f1,
            mean_accuracy: mean_std(&acc).0,
            fold_metrics,
        }
    }
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in test {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

fn pick<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Cross-validation around an arbitrary predictor: `predict_fold(fold, train,
/// test)` returns one label per test index. Folds run in parallel; results
/// are kept in fold order.
pub fn cv_with<F>(y: &[Label], folds: &[Vec<usize>], predict_fold: F) -> Result<CvResult, EvalError>
where
    F: Fn(usize, &[usize], &[usize]) -> Result<Vec<Label>, PipelineError> + Sync,
{
    let reports: Vec<MetricsReport> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let train = complement(y.len(), test);
            let pred = predict_fold(f, &train, test)
                .map_err(|source| EvalError::Fold { fold: f, source })?;
            metrics(&pick(y, test), &pred)
        })
        .collect::<Result<_, _>>()?;
    Ok(CvResult::from_reports(reports))
}

/// Everything fitted on one fold's training side, reused by every grid cell.
#[derive(Clone, Debug)]
pub struct FoldInputs {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub featurizer: Featurizer,
    pub tfidf_train: CsrMatrix,
    pub tfidf_test: CsrMatrix,
    pub counts_train: CsrMatrix,
    pub counts_test: CsrMatrix,
    /// Columns kept by L1 selection on the training side, when requested.
    pub selected: Option<Vec<usize>>,
}

/// Fits vocabularies, standardization and (optionally) L1 selection on each
/// fold's training documents only.
pub fn prepare_folds(
    docs: &[PreparedDoc],
    y: &[Label],
    folds: &[Vec<usize>],
    settings: &FeatureSettings,
    selection: Option<Selection>,
) -> Result<Vec<FoldInputs>, EvalError> {
    folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let train = complement(docs.len(), test);
            let train_docs: Vec<&PreparedDoc> = train.iter().map(|&i| &docs[i]).collect();
            let test_docs: Vec<&PreparedDoc> = test.iter().map(|&i| &docs[i]).collect();
            let wrap = |source: PipelineError| EvalError::Fold { fold: f, source };
            let featurizer = Featurizer::fit(&train_docs, settings).map_err(|e| wrap(e.into()))?;
            let tfidf_train = featurizer.transform(&train_docs).matrix;
            let selected = match selection {
                Some(s) => Some(
                    select_l1(&tfidf_train, &pick(y, &train), s.c, s.tol)
                        .map_err(|e| wrap(e.into()))?,
                ),
                None => None,
            };
            Ok(FoldInputs {
                tfidf_test: featurizer.transform(&test_docs).matrix,
                counts_train: featurizer.transform_counts(&train_docs),
                counts_test: featurizer.transform_counts(&test_docs),
                tfidf_train,
                featurizer,
                selected,
                train,
                test: test.clone(),
            })
        })
        .collect()
}

fn evaluate(
    fold: &FoldInputs,
    spec: &ModelSpec,
    y: &[Label],
    opts: SolverOptions,
) -> Result<MetricsReport, PipelineError> {
    let y_train = pick(y, &fold.train);
    let (model, x_test) = match (spec.kind, &fold.selected) {
        (ModelKind::Nb, _) => (
            fit_spec(spec, &fold.counts_train, &y_train, opts)?,
            &fold.counts_test,
        ),
        (_, Some(cols)) => (
            fit_projected(spec, &fold.tfidf_train, &y_train, cols.clone(), opts)?,
            &fold.tfidf_test,
        ),
        (_, None) => (
            fit_spec(spec, &fold.tfidf_train, &y_train, opts)?,
            &fold.tfidf_test,
        ),
    };
    let pred = model.predict(x_test)?;
    Ok(metrics(&pick(y, &fold.test), &pred).expect("fold predictions align with fold labels"))
}

fn needs_selection(grid: &[ModelSpec]) -> bool {
    grid.iter().any(|s| s.kind != ModelKind::Nb)
}

/// Stratified k-fold cross-validation of one model setting. Features,
/// standardization and selection are refitted inside every fold.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    docs: &[PreparedDoc],
    y: &[Label],
    spec: &ModelSpec,
    settings: &FeatureSettings,
    selection: Selection,
    opts: SolverOptions,
    k: usize,
    seed: u64,
) -> Result<CvResult, EvalError> {
    let folds = kfold_indices(y, k, seed)?;
    let sel = needs_selection(std::slice::from_ref(spec)).then_some(selection);
    let prepared = prepare_folds(docs, y, &folds, settings, sel)?;
    let reports = prepared
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            evaluate(fold, spec, y, opts).map_err(|source| EvalError::Fold { fold: f, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvResult::from_reports(reports))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub spec: ModelSpec,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_accuracy: f64,
    /// Set when any fold failed; the row is then never selected.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub rows: Vec<GridRow>,
    pub best: usize,
    pub folds: Vec<Vec<usize>>,
}

impl GridSearchResult {
    pub fn best_row(&self) -> &GridRow {
        &self.rows[self.best]
    }
}

/// Highest mean weighted F1; ties go to the smaller C, then to logistic
/// regression over the SVM over naive Bayes, then to the earlier row.
pub fn select_best(rows: &[GridRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        if r.error.is_some() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &rows[b];
                r.mean_f1 > cur.mean_f1
                    || (r.mean_f1 == cur.mean_f1
                        && (r.spec.c < cur.spec.c
                            || (r.spec.c == cur.spec.c
                                && r.spec.kind.priority() < cur.spec.kind.priority())))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Cross-validates every grid cell on one shared set of folds.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    docs: &[PreparedDoc],
    y: &[Label],
    grid: &[ModelSpec],
    settings: &FeatureSettings,
    selection: Selection,
    opts: SolverOptions,
    k: usize,
    seed: u64,
) -> Result<GridSearchResult, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let folds = kfold_indices(y, k, seed)?;
    let prepared = prepare_folds(
        docs,
        y,
        &folds,
        settings,
        needs_selection(grid).then_some(selection),
    )?;
    let rows: Vec<GridRow> = grid
        .par_iter()
        .map(|spec| {
            let results: Vec<Result<MetricsReport, String>> = prepared
                .par_iter()
                .enumerate()
                .map(|(f, fold)| {
                    evaluate(fold, spec, y, opts).map_err(|e| format!("fold {f}: {e}"))
                })
                .collect();
            match results.into_iter().collect::<Result<Vec<_>, _>>() {
                Ok(reports) => {
                    let cv = CvResult::from_reports(reports);
                    GridRow {
                        spec: *spec,
                        fold_f1: cv.fold_metrics.iter().map(|m| m.weighted_f1).collect(),
                        mean_f1: cv.mean_f1,
                        std_f1: cv.std_f1,
                        mean_accuracy: cv.mean_accuracy,
                        error: None,
                    }
                }
                Err(e) => GridRow {
                    spec: *spec,
                    fold_f1: Vec::new(),
                    mean_f1: f64::NAN,
                    std_f1: f64::NAN,
                    mean_accuracy: f64::NAN,
                    error: Some(e),
                },
            }
        })
        .collect();
    match select_best(&rows) {
        Some(best) => Ok(GridSearchResult { rows, best, folds }),
        None => Err(EvalError::AllFailed(
            rows.iter()
                .map(|r| format!("{}: {}", r.spec, r.error.as_deref().unwrap_or("")))
                .collect(),
        )),
    }
}
