//! Compressed sparse row matrix.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(n_cols: usize) -> Self {
        CsrMatrix {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from dense rows, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = CsrMatrix::new(n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged dense rows");
            m.push_row(
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v)),
            );
        }
        m
    }

    /// Appends a row. Column indices must be strictly increasing and `< n_cols`.
    pub fn push_row<I: IntoIterator<Item = (usize, f64)>>(&mut self, entries: I) {
        let start = self.indices.len();
        for (j, v) in entries {
            assert!(j < self.n_cols, "column {j} out of range {}", self.n_cols);
            if let Some(&last) = self.indices[start..].last() {
                assert!(j > last, "columns must be strictly increasing");
            }
            self.indices.push(j);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let (idx, vals) = self.row(i);
        idx.iter().zip(vals).map(|(&j, &v)| v * w[j]).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|i| {
                let mut r = vec![0.0; self.n_cols];
                let (idx, vals) = self.row(i);
                for (&j, &v) in idx.iter().zip(vals) {
                    r[j] = v;
                }
                r
            })
            .collect()
    }

    /// Keeps only `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut m = CsrMatrix::new(self.n_cols);
        for &i in rows {
            let (idx, vals) = self.row(i);
            m.push_row(idx.iter().copied().zip(vals.iter().copied()));
        }
        m
    }

    /// Keeps only `cols` (sorted, unique); column `cols[k]` becomes column `k`.
    pub fn select_columns(&self, cols: &[usize]) -> CsrMatrix {
        let mut remap = vec![usize::MAX; self.n_cols];
        for (k, &j) in cols.iter().enumerate() {
            remap[j] = k;
        }
        let mut m = CsrMatrix::new(cols.len());
        for i in 0..self.n_rows() {
            let (idx, vals) = self.row(i);
            m.push_row(
                idx.iter()
                    .zip(vals)
                    .filter(|(&j, _)| remap[j] != usize::MAX)
                    .map(|(&j, &v)| (remap[j], v)),
            );
        }
        m
    }

    /// Horizontal concatenation. All blocks must have the same row count.
    pub fn hstack(blocks: &[&CsrMatrix]) -> CsrMatrix {
        let n_rows = blocks.first().map_or(0, |b| b.n_rows());
        assert!(
            blocks.iter().all(|b| b.n_rows() == n_rows),
            "row count mismatch"
        );
        let mut m = CsrMatrix::new(blocks.iter().map(|b| b.n_cols).sum());
        for i in 0..n_rows {
            let mut offset = 0;
            let mut entries = Vec::new();
            for b in blocks {
                let (idx, vals) = b.row(i);
                entries.extend(idx.iter().zip(vals).map(|(&j, &v)| (j + offset, v)));
                offset += b.n_cols;
            }
            m.push_row(entries);
        }
        m
    }

    /// Column-major view: for each column, its `(row, value)` entries.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for i in 0..self.n_rows() {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                cols[j].push((i, v));
            }
        }
        cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checks structural invariants.
    pub fn is_well_formed(&self) -> bool {
        self.indptr.first() == Some(&0)
            && self.indptr.last() == Some(&self.indices.len())
            && self.indices.len() == self.values.len()
            && (0..self.n_rows()).all(|i| {
                let (idx, _) = self.row(i);
                idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&j| j < self.n_cols)
            })
    }
}
