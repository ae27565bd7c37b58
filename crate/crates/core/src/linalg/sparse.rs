use rayon::prelude::*;

use super::lanczos::LinearOperator;

/// Compressed-sparse-row symmetric matrix (both triangles stored).
#[derive(Debug, Clone)]
pub struct SparseSymmetric {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// Build from per-row `(col, value)` lists. Rows must already contain
    /// both triangles.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b]
            .iter()
            .zip(&self.vals[a..b])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |e| e.1))
            .collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(c, v)| (i, c, v)))
    }
}

impl LinearOperator for SparseSymmetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(4096).enumerate().for_each(|(chunk, ys)| {
            let base = chunk * 4096;
            for (off, yi) in ys.iter_mut().enumerate() {
                let i = base + off;
                let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
                let mut acc = 0.0;
                for k in a..b {
                    acc += self.vals[k] * x[self.cols[k] as usize];
                }
                *yi = acc;
            }
        });
    }
}
