use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, GridSearchResult, MetricsReport};
use crate::corpus::{Label, LabeledTweet};
use crate::linmodel::{argmax, LinError};
use crate::pipeline::Classifier;
use crate::sparse::CsrMatrix;
use crate::vectorize::Block;

/// Feature contributions listed per bucket entry.
const CONTRIBUTIONS_PER_ENTRY: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub block: Block,
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketEntry {
    pub row: usize,
    pub id: String,
    pub text: String,
    /// Model scores in class order, NaN for classes the model never saw.
    pub scores: [f64; 3],
    /// Score of the predicted class; entries are sorted by it, descending.
    pub score: f64,
    /// Largest `x_j * w_j` terms toward the predicted class.
    pub contributions: Vec<WeightEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBucket {
    pub truth: Label,
    pub predicted: Label,
    /// Records in this cell before truncation to `top_n`.
    pub total: usize,
    pub entries: Vec<BucketEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// All nine confusion cells, true class major.
    pub buckets: Vec<ErrorBucket>,
    /// Per model class, the `top_n` weights of largest magnitude.
    pub top_weights: Vec<(Label, Vec<WeightEntry>)>,
}

/// Ranks examples in each confusion cell and lists the heaviest weights.
///
/// `x` is the classifier's input matrix for `corpus` (see
/// [`Classifier::inputs`]); every record must carry a label.
pub fn error_report(
    clf: &Classifier,
    x: &CsrMatrix,
    corpus: &[LabeledTweet],
    top_n: usize,
) -> Result<ErrorReport, LinError> {
    let model = &clf.model;
    let scores = model.predict_scores(x)?;
    let registry = clf.model_registry();
    let projected = match &model.selected_columns {
        Some(cols) => x.select_columns(cols),
        None => x.clone(),
    };

    let mut cells: Vec<Vec<BucketEntry>> = vec![Vec::new(); 9];
    for (i, (tweet, row)) in corpus.iter().zip(&scores).enumerate() {
        let Some(truth) = tweet.label else { continue };
        let k = argmax(row);
        let predicted = model.classes[k];
        let mut full = [f64::NAN; 3];
        for (class, &s) in model.classes.iter().zip(row) {
            full[class.index()] = s;
        }
        let (idx, vals) = projected.row(i);
        let mut contributions: Vec<WeightEntry> = idx
            .iter()
            .zip(vals)
            .map(|(&j, &v)| WeightEntry {
                block: registry[j].block,
                name: registry[j].name.clone(),
                value: v * model.weights[k][j],
            })
            .collect();
        contributions.sort_by(|a, b| {
            b.value
                .total_cmp(&a.value)
                .then_with(|| a.name.cmp(&b.name))
        });
        contributions.truncate(CONTRIBUTIONS_PER_ENTRY);
        cells[truth.index() * 3 + predicted.index()].push(BucketEntry {
            row: i,
            id: tweet.id.clone(),
            text: tweet.text.clone(),
            scores: full,
            score: row[k],
            contributions,
        });
    }

    let buckets = cells
        .into_iter()
        .enumerate()
        .map(|(c, mut entries)| {
            entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.row.cmp(&b.row)));
            let total = entries.len();
            entries.truncate(top_n);
            ErrorBucket {
                truth: Label::ALL[c / 3],
                predicted: Label::ALL[c % 3],
                total,
                entries,
            }
        })
        .collect();

    let top_weights = model
        .classes
        .iter()
        .zip(&model.weights)
        .map(|(&class, w)| {
            let mut order: Vec<usize> = (0..w.len()).collect();
            order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
            let entries = order
                .into_iter()
                .take(top_n)
                .map(|j| WeightEntry {
                    block: registry[j].block,
                    name: registry[j].name.clone(),
                    value: w[j],
                })
                .collect();
            (class, entries)
        })
        .collect();

    Ok(ErrorReport {
        buckets,
        top_weights,
    })
}

fn csv_string(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
}

/// `class,precision,recall,f1,support` rows, then the weighted averages and
/// accuracy.
pub fn metrics_csv(m: &MetricsReport) -> String {
    let mut rows = vec![vec!["class", "precision", "recall", "f1", "support"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()];
    for c in &m.per_class {
        rows.push(vec![
            c.label.name().to_string(),
            c.precision.to_string(),
            c.recall.to_string(),
            c.f1.to_string(),
            c.support.to_string(),
        ]);
    }
    rows.push(vec![
        "weighted".into(),
        m.weighted_precision.to_string(),
        m.weighted_recall.to_string(),
        m.weighted_f1.to_string(),
        m.n.to_string(),
    ]);
    rows.push(vec![
        "accuracy".into(),
        String::new(),
        String::new(),
        m.accuracy.to_string(),
        m.n.to_string(),
    ]);
    csv_string(&rows)
}

/// Counts then row-normalized values, one row per (kind, true class).
pub fn confusion_csv(c: &ConfusionMatrix) -> String {
    let mut rows = vec![["kind", "true", "hate", "offensive", "neither"]
        .map(String::from)
        .to_vec()];
    let norm = c.normalized();
    for l in Label::ALL {
        let mut r = vec!["count".to_string(), l.name().to_string()];
        r.extend(c.counts[l.index()].iter().map(u64::to_string));
        rows.push(r);
    }
    for l in Label::ALL {
        let mut r = vec!["normalized".to_string(), l.name().to_string()];
        r.extend(norm[l.index()].iter().map(f64::to_string));
        rows.push(r);
    }
    csv_string(&rows)
}

/// One row per grid cell with per-fold F1 and a `best` flag.
pub fn grid_csv(g: &GridSearchResult) -> String {
    let k = g.folds.len();
    let mut header: Vec<String> = [
        "model",
        "penalty",
        "c",
        "class_weight",
        "mean_f1",
        "std_f1",
        "mean_accuracy",
    ]
    .map(String::from)
    .to_vec();
    header.extend((0..k).map(|f| format!("fold{f}_f1")));
    header.extend(["best".to_string(), "error".to_string()]);
    let mut rows = vec![header];
    for (i, r) in g.rows.iter().enumerate() {
        let mut row = vec![
            r.spec.kind.to_string(),
            r.spec.penalty.to_string(),
            r.spec.c.to_string(),
            r.spec.class_weight.to_string(),
            r.mean_f1.to_string(),
            r.std_f1.to_string(),
            r.mean_accuracy.to_string(),
        ];
        row.extend((0..k).map(|f| r.fold_f1.get(f).map_or(String::new(), f64::to_string)));
        row.push(u8::from(i == g.best).to_string());
        row.push(r.error.clone().unwrap_or_default());
        rows.push(row);
    }
    csv_string(&rows)
}

/// Fixed-width metrics table.
pub fn render_metrics(m: &MetricsReport) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<12}{:>10}{:>10}{:>10}{:>10}",
        "class", "precision", "recall", "f1", "support"
    )
    .unwrap();
    for c in &m.per_class {
        writeln!(
            s,
            "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>10}",
            c.label.name(),
            c.precision,
            c.recall,
            c.f1,
            c.support
        )
        .unwrap();
    }
    writeln!(
        s,
        "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>10}",
        "weighted", m.weighted_precision, m.weighted_recall, m.weighted_f1, m.n
    )
    .unwrap();
    writeln!(s, "accuracy {:.4}", m.accuracy).unwrap();
    s
}

/// Counts and row-normalized matrix, true classes down, predictions across.
pub fn render_confusion(c: &ConfusionMatrix) -> String {
    let mut s = String::new();
    let norm = c.normalized();
    writeln!(
        s,
        "{:<12}{:>10}{:>10}{:>10}   (true \\ predicted)",
        "", "hate", "offensive", "neither"
    )
    .unwrap();
    for l in Label::ALL {
        let r = &c.counts[l.index()];
        let n = &norm[l.index()];
        writeln!(
            s,
            "{:<12}{:>10}{:>10}{:>10}   {:.3} {:.3} {:.3}",
            l.name(),
            r[0],
            r[1],
            r[2],
            n[0],
            n[1],
            n[2]
        )
        .unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalharness::{confusion, metrics};
    use Label::*;

    #[test]
    fn csv_layouts() {
        let t = [Hate, Offensive, Neither, Offensive];
        let p = [Hate, Offensive, Offensive, Offensive];
        let m = metrics(&t, &p).unwrap();
        let csv = metrics_csv(&m);
        assert!(csv.starts_with("class,precision,recall,f1,support\nhate,1,1,1,1\n"));
        assert!(csv.contains("\nneither,0,0,0,1\n"));
        let c = confusion_csv(&confusion(&t, &p).unwrap());
        assert!(c.contains("count,offensive,0,2,0\n"));
        assert!(c.contains("normalized,neither,0,1,0\n"));
        assert!(render_confusion(&confusion(&t, &p).unwrap()).contains("neither"));
        assert!(render_metrics(&m).contains("weighted"));
    }
}
