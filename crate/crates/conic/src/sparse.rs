//! Minimal row-oriented sparse matrix, enough for constraint systems.

use crate::Scalar;

#[derive(Debug, Clone)]
pub struct SparseMat<S> {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> SparseMat<S> {
    pub fn new(ncols: usize) -> Self {
        Self { nrows: 0, ncols, rows: Vec::new() }
    }

    /// Appends a row given as (column, value) pairs; returns its index.
    pub fn push_row(&mut self, mut entries: Vec<(usize, S)>) -> usize {
        entries.sort_by_key(|&(c, _)| c);
        debug_assert!(entries.iter().all(|&(c, _)| c < self.ncols));
        self.rows.push(entries);
        self.nrows += 1;
        self.nrows - 1
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, S)] {
        &self.rows[i]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut Vec<(usize, S)> {
        &mut self.rows[i]
    }

    /// y = A x
    pub fn matvec(&self, x: &[S], y: &mut [S]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = S::zero();
            for &(c, v) in row {
                acc += v * x[c];
            }
            y[i] = acc;
        }
    }

    /// y = A^T x
    pub fn tr_matvec(&self, x: &[S], y: &mut [S]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for v in y.iter_mut() {
            *v = S::zero();
        }
        for (i, row) in self.rows.iter().enumerate() {
            let xi = x[i];
            if xi == S::zero() {
                continue;
            }
            for &(c, v) in row {
                y[c] += v * xi;
            }
        }
    }

    /// Dense Gram matrix A A^T (row-major, nrows x nrows).
    pub fn gram(&self) -> Vec<S> {
        // Column-wise accumulation of outer products keeps this proportional
        // to sum over columns of nnz(col)^2.
        let mut cols: Vec<Vec<(usize, S)>> = vec![Vec::new(); self.ncols];
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                cols[c].push((i, v));
            }
        }
        let m = self.nrows;
        let mut g = vec![S::zero(); m * m];
        for col in &cols {
            for &(r1, v1) in col {
                for &(r2, v2) in col {
                    g[r1 * m + r2] += v1 * v2;
                }
            }
        }
        g
    }

    pub fn scale_rows(&mut self, scale: &[S]) {
        debug_assert_eq!(scale.len(), self.nrows);
        for (i, row) in self.rows.iter_mut().enumerate() {
            for e in row.iter_mut() {
                e.1 *= scale[i];
            }
        }
    }

    pub fn scale_cols(&mut self, scale: &[S]) {
        debug_assert_eq!(scale.len(), self.ncols);
        for row in self.rows.iter_mut() {
            for e in row.iter_mut() {
                e.1 *= scale[e.0];
            }
        }
    }
}
