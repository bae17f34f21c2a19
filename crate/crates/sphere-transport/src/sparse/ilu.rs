//! Zero-fill incomplete LU factorization (IKJ variant, Saad section 10.3).
//!
//! The factors live on exactly the sparsity pattern of the input matrix:
//! L is unit lower triangular (diagonal implicit), U holds the diagonal.
//! Matrices whose exact LU has no fill (diagonal, triangular, tridiagonal)
//! are factored exactly.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Combined L\U storage over the input pattern.
#[derive(Debug, Clone)]
pub struct Ilu0Factors {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    luval: Vec<f64>,
    /// Position of the diagonal entry within each row.
    diag: Vec<usize>,
}

impl Ilu0Factors {
    /// Factorize on the pattern of `a`. Every row needs a structural
    /// diagonal; a pivot with |u_ii| below 1e-14 times the infinity norm
    /// of the original row is treated as zero.
    pub fn factorize(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::NotSquare {
                n_rows: n,
                n_cols: a.n_cols(),
            });
        }
        let row_offsets = a.row_offsets().to_vec();
        let col_indices = a.col_indices().to_vec();
        let mut luval = a.values().to_vec();

        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_offsets[i]..row_offsets[i + 1] {
                if col_indices[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::MissingDiagonal { row: i });
            }
        }

        // scratch map from column to position in the current row
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            let row_norm = luval[lo..hi]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            for k in lo..hi {
                pos[col_indices[k]] = k;
            }
            // eliminate with rows k < i in ascending column order
            for kk in lo..hi {
                let k = col_indices[kk];
                if k >= i {
                    break;
                }
                let pivot = luval[diag[k]];
                if pivot.abs() <= 1e-14 * row_norm.max(f64::MIN_POSITIVE) {
                    return Err(Error::ZeroPivot {
                        row: k,
                        pivot: pivot.abs(),
                    });
                }
                let factor = luval[kk] / pivot;
                luval[kk] = factor;
                // subtract factor times the U part of row k, restricted
                // to the pattern of row i
                for kj in (diag[k] + 1)..row_offsets[k + 1] {
                    let j = col_indices[kj];
                    let p = pos[j];
                    if p != usize::MAX {
                        luval[p] -= factor * luval[kj];
                    }
                }
            }
            let pivot = luval[diag[i]];
            if pivot.abs() <= 1e-14 * row_norm.max(f64::MIN_POSITIVE) {
                return Err(Error::ZeroPivot {
                    row: i,
                    pivot: pivot.abs(),
                });
            }
            for k in lo..hi {
                pos[col_indices[k]] = usize::MAX;
            }
        }
        Ok(Ilu0Factors {
            n,
            row_offsets,
            col_indices,
            luval,
            diag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve L U z = r by forward and back substitution.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut z = vec![0.0; self.n];
        self.apply_into(r, &mut z)?;
        Ok(z)
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        if r.len() != self.n || z.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "ilu apply",
                expected: self.n,
                got: r.len(),
            });
        }
        // forward: L y = r, unit diagonal
        for i in 0..self.n {
            let mut sum = r[i];
            for k in self.row_offsets[i]..self.diag[i] {
                sum -= self.luval[k] * z[self.col_indices[k]];
            }
            z[i] = sum;
        }
        // backward: U z = y
        for i in (0..self.n).rev() {
            let mut sum = z[i];
            for k in (self.diag[i] + 1)..self.row_offsets[i + 1] {
                sum -= self.luval[k] * z[self.col_indices[k]];
            }
            z[i] = sum / self.luval[self.diag[i]];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 4.0), (2, 2, 8.0)])
            .unwrap();
        let f = Ilu0Factors::factorize(&a).unwrap();
        let z = f.apply(&[2.0, 4.0, 8.0]).unwrap();
        assert_eq!(z, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn lower_triangular_is_exact() {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (2, 0, -1.0),
                (2, 1, 2.0),
                (2, 2, 4.0),
            ],
        )
        .unwrap();
        let f = Ilu0Factors::factorize(&a).unwrap();
        // pick x, form b = A x, check the factors solve exactly
        let x = vec![1.0, -2.0, 0.5];
        let b = a.spmv(&x).unwrap();
        let z = f.apply(&b).unwrap();
        for (zi, xi) in z.iter().zip(&x) {
            assert_abs_diff_eq!(zi, xi, epsilon = 1e-14);
        }
    }

    #[test]
    fn tridiagonal_matches_dense_lu() {
        let n = 10;
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 2.5 + i as f64 * 0.1));
            if i > 0 {
                triplets.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                triplets.push((i, i + 1, -0.8));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &triplets).unwrap();
        let f = Ilu0Factors::factorize(&a).unwrap();

        // tridiagonal LU has no fill, so ILU(0) equals dense LU restricted
        // to the pattern; compare solves instead of factors directly
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let z = f.apply(&b).unwrap();
        let dense = a.to_dense();
        let zd = dense
            .lu()
            .solve(&nalgebra::DVector::from_vec(b.clone()))
            .unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(z[i], zd[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn missing_diagonal_rejected() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(
            Ilu0Factors::factorize(&a),
            Err(Error::MissingDiagonal { row: 1 })
        ));
    }

    #[test]
    fn zero_pivot_rejected() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
            .unwrap();
        assert!(matches!(
            Ilu0Factors::factorize(&a),
            Err(Error::ZeroPivot { row: 0, .. })
        ));
    }
}
