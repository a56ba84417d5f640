//! N-gram TF-IDF blocks, feature assembly with a named registry, scalar
//! standardization, and L1-based column selection.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::lexfeat::SCALAR_NAMES;
use crate::linmodel::{self, ClassWeight, LinError, Penalty, SolverOptions};
use crate::sparse::CsrMatrix;

/// Number of scalar columns appended after the n-gram blocks.
pub const N_SCALARS: usize = 17;

/// Coefficients at or below this magnitude count as zero during selection.
pub const SELECTION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("{block} block has {found} rows, expected {expected}")]
    RowMismatch {
        block: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("L1 selection at C = {c} kept no columns; use a larger C")]
    EmptySelection { c: f64 },
    #[error("selection model: {0}")]
    Model(#[from] LinError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    WordNgram,
    PosNgram,
    Sentiment,
    Readability,
    Surface,
}

impl Block {
    pub fn name(self) -> &'static str {
        match self {
            Block::WordNgram => "word-ngram",
            Block::PosNgram => "pos-ngram",
            Block::Sentiment => "sentiment",
            Block::Readability => "readability",
            Block::Surface => "surface",
        }
    }

    /// Block of scalar column `i` (0..17).
    fn of_scalar(i: usize) -> Block {
        match i {
            0..=3 => Block::Sentiment,
            4..=5 => Block::Readability,
            _ => Block::Surface,
        }
    }
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureName {
    pub block: Block,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// N-grams in lexicographic order; position is the column index.
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    n_lo: usize,
    n_hi: usize,
    min_df: usize,
    max_df_ratio: f64,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Contiguous n-grams of orders `lo..=hi`, tokens joined with one space.
pub fn ngrams<S: AsRef<str>>(doc: &[S], lo: usize, hi: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in lo..=hi {
        for w in doc.windows(n) {
            let parts: Vec<&str> = w.iter().map(AsRef::as_ref).collect();
            out.push(parts.join(" "));
        }
    }
    out
}

/// Fits a vocabulary, keeping n-grams with `min_df <= df <= max_df_ratio * n_docs`.
pub fn fit_vocab<D: AsRef<[S]>, S: AsRef<str>>(
    docs: &[D],
    n_lo: usize,
    n_hi: usize,
    min_df: usize,
    max_df_ratio: f64,
) -> Result<Vocabulary, VectorizeError> {
    if !(1 <= n_lo && n_lo <= n_hi) {
        return Err(VectorizeError::BadParameter(format!(
            "n-gram range {n_lo}..{n_hi}"
        )));
    }
    if min_df < 1 {
        return Err(VectorizeError::BadParameter(
            "min_df must be at least 1".into(),
        ));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(VectorizeError::BadParameter(format!(
            "max_df_ratio {max_df_ratio} outside (0, 1]"
        )));
    }
    if docs.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let mut grams = ngrams(doc.as_ref(), n_lo, n_hi);
        grams.sort_unstable();
        grams.dedup();
        for g in grams {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let (terms, df): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df && d as f64 <= max_df)
        .unzip();
    Ok(Vocabulary::from_parts(
        terms,
        df,
        docs.len(),
        n_lo,
        n_hi,
        min_df,
        max_df_ratio,
    ))
}

impl Vocabulary {
    fn from_parts(
        terms: Vec<String>,
        df: Vec<usize>,
        n_docs: usize,
        n_lo: usize,
        n_hi: usize,
        min_df: usize,
        max_df_ratio: f64,
    ) -> Self {
        let mut v = Vocabulary {
            terms,
            df,
            n_docs,
            n_lo,
            n_hi,
            min_df,
            max_df_ratio,
            index: HashMap::new(),
        };
        v.rebuild_index();
        v
    }

    /// Restores the lookup table after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn df(&self, ngram: &str) -> Option<usize> {
        self.index_of(ngram).map(|i| self.df[i])
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn ngram_range(&self) -> (usize, usize) {
        (self.n_lo, self.n_hi)
    }

    /// `ln((1 + n_docs) / (1 + df)) + 1` for column `i`.
    pub fn idf(&self, i: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df[i] as f64)).ln() + 1.0
    }

    fn count_row<S: AsRef<str>>(&self, doc: &[S]) -> BTreeMap<usize, f64> {
        let mut counts = BTreeMap::new();
        for g in ngrams(doc, self.n_lo, self.n_hi) {
            if let Some(&i) = self.index.get(&g) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        counts
    }

    /// Raw n-gram counts per document; unknown n-grams are ignored.
    pub fn transform_counts<D, S>(&self, docs: &[D]) -> CsrMatrix
    where
        D: AsRef<[S]> + Sync,
        S: AsRef<str>,
    {
        let rows: Vec<BTreeMap<usize, f64>> = docs
            .par_iter()
            .map(|d| self.count_row(d.as_ref()))
            .collect();
        let mut m = CsrMatrix::new(self.len());
        for r in rows {
            m.push_row(r);
        }
        m
    }

    /// Count times IDF, each row scaled to unit L2 norm (empty rows stay zero).
    pub fn transform_tfidf<D, S>(&self, docs: &[D]) -> CsrMatrix
    where
        D: AsRef<[S]> + Sync,
        S: AsRef<str>,
    {
        let rows: Vec<Vec<(usize, f64)>> = docs
            .par_iter()
            .map(|d| {
                let mut row: Vec<(usize, f64)> = self
                    .count_row(d.as_ref())
                    .into_iter()
                    .map(|(i, c)| (i, c * self.idf(i)))
                    .collect();
                let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for (_, v) in &mut row {
                        *v /= norm;
                    }
                }
                row
            })
            .collect();
        let mut m = CsrMatrix::new(self.len());
        for r in rows {
            m.push_row(r);
        }
        m
    }

    /// TF-IDF block with registry names.
    pub fn transform_block<D, S>(&self, docs: &[D], block: Block) -> FeatureMatrix
    where
        D: AsRef<[S]> + Sync,
        S: AsRef<str>,
    {
        FeatureMatrix {
            matrix: self.transform_tfidf(docs),
            registry: self.registry(block),
        }
    }

    /// Registry entries for this vocabulary's columns.
    pub fn registry(&self, block: Block) -> Vec<FeatureName> {
        self.terms
            .iter()
            .map(|t| FeatureName {
                block,
                name: t.clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub matrix: CsrMatrix,
    pub registry: Vec<FeatureName>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Keeps `cols` (sorted, unique) and their registry entries.
    pub fn project(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            matrix: self.matrix.select_columns(cols),
            registry: cols.iter().map(|&c| self.registry[c].clone()).collect(),
        }
    }

    pub fn registry_csv(&self) -> String {
        registry_csv(&self.registry)
    }
}

/// Registry as CSV with columns `index,block,name`.
pub fn registry_csv(registry: &[FeatureName]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "block", "name"])
        .expect("write to memory");
    for (i, f) in registry.iter().enumerate() {
        w.write_record([i.to_string().as_str(), f.block.name(), f.name.as_str()])
            .expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

/// Per-column mean and population standard deviation of the scalar block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[[f64; N_SCALARS]]) -> Standardizer {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; N_SCALARS];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; N_SCALARS];
        for r in rows {
            for j in 0..N_SCALARS {
                let d = r[j] - mean[j];
                var[j] += d * d;
            }
        }
        Standardizer {
            mean,
            std: var.into_iter().map(|v| (v / n).sqrt()).collect(),
        }
    }

    /// `(x - mean) / std`; columns with zero spread map to 0.
    pub fn apply(&self, row: &[f64; N_SCALARS]) -> [f64; N_SCALARS] {
        let mut out = [0.0; N_SCALARS];
        for j in 0..N_SCALARS {
            if self.std[j] > 0.0 {
                out[j] = (row[j] - self.mean[j]) / self.std[j];
            }
        }
        out
    }
}

/// Concatenates `[word | pos | sentiment | readability | surface]`. Scalar rows
/// are standardized when a fitted standardizer is given.
pub fn assemble_features(
    word: &FeatureMatrix,
    pos: &FeatureMatrix,
    scalars: &[[f64; N_SCALARS]],
    standardizer: Option<&Standardizer>,
) -> Result<FeatureMatrix, VectorizeError> {
    let n = word.n_rows();
    if pos.n_rows() != n {
        return Err(VectorizeError::RowMismatch {
            block: "pos-ngram",
            expected: n,
            found: pos.n_rows(),
        });
    }
    if scalars.len() != n {
        return Err(VectorizeError::RowMismatch {
            block: "scalar",
            expected: n,
            found: scalars.len(),
        });
    }
    let mut scalar_block = CsrMatrix::new(N_SCALARS);
    for row in scalars {
        let values = standardizer.map_or(*row, |s| s.apply(row));
        scalar_block.push_row(values.into_iter().enumerate().filter(|(_, v)| *v != 0.0));
    }
    let registry = word
        .registry
        .iter()
        .chain(&pos.registry)
        .cloned()
        .chain(
            SCALAR_NAMES
                .iter()
                .enumerate()
                .map(|(i, name)| FeatureName {
                    block: Block::of_scalar(i),
                    name: name.to_string(),
                }),
        )
        .collect();
    Ok(FeatureMatrix {
        matrix: CsrMatrix::hstack(&[&word.matrix, &pos.matrix, &scalar_block]),
        registry,
    })
}

/// Columns with a coefficient above [`SELECTION_THRESHOLD`] in any class of a
/// one-vs-rest L1 logistic regression, in increasing order.
pub fn select_l1(
    x: &CsrMatrix,
    y: &[Label],
    c: f64,
    tol: f64,
) -> Result<Vec<usize>, VectorizeError> {
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    let model = linmodel::fit_logreg(x, y, Penalty::L1, c, ClassWeight::Uniform, opts)?;
    let kept: Vec<usize> = (0..x.n_cols())
        .filter(|&j| {
            model
                .weights
                .iter()
                .any(|w| w[j].abs() > SELECTION_THRESHOLD)
        })
        .collect();
    if kept.is_empty() {
        return Err(VectorizeError::EmptySelection { c });
    }
    Ok(kept)
}
