//! Compressed sparse row matrices and the iterative solver stack used for
//! the per-step transport systems.

mod bicgstab;
mod ilu;

pub use bicgstab::{bicgstab, SolveReport};
pub use ilu::Ilu0Factors;

use std::io::Write;

use crate::error::{Error, Result};

/// Real matrix in compressed sparse row storage. Column indices are
/// strictly increasing within each row; explicit zeros are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets. Duplicates are summed and
    /// entries end up in canonical row-major, column-sorted order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::EntryOutOfBounds {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = entries.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                prev = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Build directly from per-row sorted (indices, values) pairs.
    pub(crate) fn from_sorted_rows(
        n_cols: usize,
        rows: Vec<(Vec<usize>, Vec<f64>)>,
    ) -> Self {
        let n_rows = rows.len();
        let nnz: usize = rows.iter().map(|(idx, _)| idx.len()).sum();
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_offsets.push(0);
        for (idx, vals) in rows {
            debug_assert_eq!(idx.len(), vals.len());
            debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            col_indices.extend_from_slice(&idx);
            values.extend_from_slice(&vals);
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub(crate) fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub(crate) fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n_rows)
            .map(|i| self.row_offsets[i + 1] - self.row_offsets[i])
            .max()
            .unwrap_or(0)
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmv input",
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "spmv output",
                expected: self.n_rows,
                got: y.len(),
            });
        }
        for i in 0..self.n_rows {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut sum = 0.0;
            for k in lo..hi {
                sum += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = sum;
        }
        Ok(())
    }

    /// Same-pattern linear combination used for the time-step systems:
    /// out = alpha * self + beta * (diag(v1) B1 + diag(v2) B2).
    /// All three matrices must share an identical sparsity pattern.
    pub(crate) fn combine_scaled(
        &self,
        alpha: f64,
        beta: f64,
        b1: &SparseMatrix,
        b2: &SparseMatrix,
        v1: &[f64],
        v2: &[f64],
    ) -> Result<SparseMatrix> {
        if self.row_offsets != b1.row_offsets
            || self.col_indices != b1.col_indices
            || self.row_offsets != b2.row_offsets
            || self.col_indices != b2.col_indices
        {
            return Err(Error::DimensionMismatch {
                context: "combine_scaled patterns",
                expected: self.nnz(),
                got: b1.nnz(),
            });
        }
        if v1.len() != self.n_rows || v2.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "combine_scaled velocities",
                expected: self.n_rows,
                got: v1.len(),
            });
        }
        let mut out = self.clone();
        for i in 0..self.n_rows {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let (w1, w2) = (beta * v1[i], beta * v2[i]);
            for k in lo..hi {
                out.values[k] =
                    alpha * self.values[k] + w1 * b1.values[k] + w2 * b2.values[k];
            }
        }
        Ok(out)
    }

    /// Dense copy, for diagnostics and small-matrix oracles.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(i, c)] += v;
            }
        }
        m
    }

    /// Dump in MatrixMarket coordinate text format (1-based indices).
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.16e}", i + 1, c + 1, v)?;
            }
        }
        Ok(())
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }
}
