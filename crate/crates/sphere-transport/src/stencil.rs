//! Shared pieces of the per-point stencil construction: the assembled row
//! type, the longitude/latitude chain rule, and the factored projection
//! behind both shape-function constructions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One assembled stencil row at an evaluation point.
///
/// `a` holds the shape-function values; `g_lambda` the
/// (1/cos theta) d a_j / d lambda entries with the cos theta division
/// cancelled analytically, so every entry stays finite at the poles;
/// `g_theta` the d a_j / d theta entries.
#[derive(Debug, Clone)]
pub struct AdvectionRow {
    pub indices: Vec<usize>,
    pub a: Vec<f64>,
    pub g_lambda: Vec<f64>,
    pub g_theta: Vec<f64>,
}

/// Combine the three Cartesian surface-gradient rows into the two
/// spherical advection rows:
///
///   g_lambda = -sin(lambda) g1 + cos(lambda) g2
///   g_theta  = -cos(lambda) sin(theta) g1 - sin(lambda) sin(theta) g2
///              + cos(theta) g3
///
/// The 1/cos(theta) of the spherical gradient cancels against the
/// cos(theta) factors of dx/dlambda and dy/dlambda, which is what makes
/// the lambda row pole-safe.
pub(crate) fn chain_rule_rows(
    lambda: f64,
    theta: f64,
    g1: &[f64],
    g2: &[f64],
    g3: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (sin_l, cos_l) = lambda.sin_cos();
    let (sin_t, cos_t) = theta.sin_cos();
    let n = g1.len();
    let mut g_lambda = Vec::with_capacity(n);
    let mut g_theta = Vec::with_capacity(n);
    for j in 0..n {
        g_lambda.push(-sin_l * g1[j] + cos_l * g2[j]);
        g_theta.push(-cos_l * sin_t * g1[j] - sin_l * sin_t * g2[j] + cos_t * g3[j]);
    }
    (g_lambda, g_theta)
}

/// Relative singular-value cutoff below which directions are dropped.
const TRUNCATION: f64 = 1e-12;

/// The map y -> B (B^T B)^{-1} y evaluated through a rank-revealing thin
/// SVD of the (column-scaled) tall matrix B, as U S^{-1} V^T y.
///
/// Both shape-function constructions reduce to this projection with
/// B = sqrt(W) P (weighted least squares) or B = L^{-1} P (kriging
/// trend, R = L L^T). Going through B instead of the Gram B^T B matters:
/// on small caps the harmonics of degree at most m collapse toward the
/// ~(m+1)(m+2)/2 locally resolvable directions and the Gram's condition
/// is the square of B's, which already reaches the reciprocal of machine
/// precision around N = 6400. The SVD route keeps the row noise at
/// eps times cond(B) and drops only directions that are numerically
/// absent from the stencil.
pub(crate) struct LsProjector {
    /// The column-scaled matrix itself, kept for true-residual refinement.
    scaled_b: DMatrix<f64>,
    u: DMatrix<f64>,
    v_t: DMatrix<f64>,
    inv_sigma: DVector<f64>,
    col_scale: DVector<f64>,
    cond_estimate: f64,
}

impl LsProjector {
    /// Factor `b` (stencil size x basis dim). The condition estimate
    /// (singular-value ratio after column scaling) is checked against
    /// `cap`.
    pub(crate) fn new(
        b: DMatrix<f64>,
        cap: f64,
        matrix: &'static str,
        hint: Option<&str>,
    ) -> Result<Self> {
        let dim = b.ncols();
        let mut col_scale = DVector::zeros(dim);
        for k in 0..dim {
            let norm = b.column(k).norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::IllConditioned {
                    matrix,
                    cond: f64::INFINITY,
                    cap,
                    hint: hint.map(str::to_owned),
                });
            }
            col_scale[k] = 1.0 / norm;
        }
        let mut scaled = b;
        for k in 0..dim {
            scaled.column_mut(k).scale_mut(col_scale[k]);
        }
        let svd = scaled.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || !smax.is_finite() {
            return Err(Error::IllConditioned {
                matrix,
                cond: f64::INFINITY,
                cap,
                hint: hint.map(str::to_owned),
            });
        }
        let cond_estimate = smax / smin;
        if cond_estimate > cap {
            return Err(Error::IllConditioned {
                matrix,
                cond: cond_estimate,
                cap,
                hint: hint.map(str::to_owned),
            });
        }
        let cutoff = TRUNCATION * smax;
        let inv_sigma = svd
            .singular_values
            .map(|s| if s > cutoff { 1.0 / s } else { 0.0 });
        Ok(LsProjector {
            scaled_b: scaled,
            u: svd.u.expect("svd with u"),
            v_t: svd.v_t.expect("svd with v_t"),
            inv_sigma,
            col_scale,
            cond_estimate,
        })
    }

    #[allow(dead_code)]
    pub(crate) fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }

    fn project(&self, scaled_y: &DVector<f64>) -> DVector<f64> {
        let mut w = &self.v_t * scaled_y;
        w.component_mul_assign(&self.inv_sigma);
        &self.u * w
    }

    /// Evaluate B (B^T B)^{-1} y (one value per stencil point), refining
    /// on the reproduction defect y - B^T out. The defect is what
    /// surfaces as harmonic-reproduction error in the assembled rows, so
    /// it is measured against the true matrix (not the factorization) and
    /// driven to machine level explicitly.
    pub(crate) fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        let scaled_y = y.component_mul(&self.col_scale);
        let mut out = self.project(&scaled_y);
        let mut last = f64::INFINITY;
        for _ in 0..4 {
            let residual = &scaled_y - self.scaled_b.transpose() * &out;
            let norm = residual.norm();
            if norm >= 0.5 * last || norm <= 1e-15 * scaled_y.norm() {
                break;
            }
            last = norm;
            out += self.project(&residual);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projects_like_the_normal_equations() {
        // well-conditioned tall matrix: compare against the dense formula
        let b = DMatrix::from_fn(9, 4, |i, j| ((i * 5 + j * 3) % 7) as f64 - 2.0);
        let y = DVector::from_vec(vec![0.3, -1.0, 0.7, 2.0]);
        let proj = LsProjector::new(b.clone(), 1e12, "test matrix", None).unwrap();
        let got = proj.apply(&y);
        let gram_inv = (b.transpose() * &b).try_inverse().unwrap();
        let expected = &b * (gram_inv * &y);
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn near_dependent_columns_survive() {
        // condition ~ 1e8: must factor fine and keep small residuals
        let mut b = DMatrix::from_fn(12, 3, |i, j| ((i + j) as f64 * 0.37).sin());
        for i in 0..12 {
            b[(i, 2)] = b[(i, 0)] + 1e-8 * ((i * i) as f64 * 0.11).cos();
        }
        let proj = LsProjector::new(b.clone(), 1e12, "test matrix", None).unwrap();
        assert!(proj.cond_estimate() > 1e6);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let a = proj.apply(&y);
        // reproduction identity B^T a = y for full-rank B; the attainable
        // defect scales with eps times the (here huge) row magnitude
        let back = b.transpose() * &a;
        let floor = 1e-12 * a.norm().max(1.0);
        assert!((&back - &y).norm() < floor.max(1e-9), "defect {}", (back - y).norm());
    }

    #[test]
    fn degenerate_matrix_is_a_conditioning_error() {
        let b = DMatrix::from_fn(6, 3, |_, j| if j == 1 { 0.0 } else { 1.0 });
        match LsProjector::new(b, 1e12, "test matrix", None) {
            Err(Error::IllConditioned { cond, .. }) => assert!(cond.is_infinite()),
            Err(other) => panic!("unexpected error {other}"),
            Ok(_) => panic!("expected a conditioning error"),
        }
    }

    #[test]
    fn condition_cap_is_enforced() {
        let mut b = DMatrix::from_fn(8, 2, |i, _| ((i + 1) as f64 * 0.21).sin());
        for i in 0..8 {
            b[(i, 1)] = b[(i, 0)] * (1.0 + 1e-13 * i as f64);
        }
        match LsProjector::new(b, 1e10, "test matrix", None) {
            Err(Error::IllConditioned { cond, cap, .. }) => {
                assert!(cond > cap);
            }
            other => panic!("expected a conditioning error, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn chain_rule_is_pole_safe() {
        let g1 = [0.3];
        let g2 = [-0.4];
        let g3 = [0.9];
        let (gl, gt) = chain_rule_rows(0.7, std::f64::consts::FRAC_PI_2, &g1, &g2, &g3);
        assert!(gl[0].is_finite() && gt[0].is_finite());
    }
}
