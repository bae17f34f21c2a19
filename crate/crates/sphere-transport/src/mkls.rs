//! Moving kriging least squares shape functions on the sphere.
//!
//! The interpolant combines a deterministic trend in the spherical
//! harmonics of degree at most m with a correlated residual whose
//! covariance is the Gaussian R(x_i, x_j) = exp(-c dist(x_i, x_j)^2) over
//! the stencil nodes. The shape-function row at x is
//!
//!   a^T(x) = Y^T(x) G^{-1} P^T R^{-1}
//!          + r^T(x) R^{-1} (I - P G^{-1} P^T R^{-1}),   G = P^T R^{-1} P,
//!
//! evaluated here as a(x) = s + Q G^{-1} (Y(x) - P^T s) with s = R^{-1} r(x)
//! and Q = R^{-1} P. Derivative rows differentiate through Y(x) and r(x)
//! only; the bracketed matrices depend on the stencil nodes alone. The
//! construction interpolates (Kronecker delta at the nodes) and reproduces
//! harmonics of degree at most m.
//!
//! The correlation distance defaults to the chordal (straight-line)
//! metric, whose Gaussian is smooth on the sphere with the closed-form
//! tangential gradient 2 c R (x_j - (x . x_j) x); the geodesic variant is
//! available behind a switch.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{
    chordal_distance_xyz, dot, geodesic_distance_xyz, PointSet, SpherePoint,
};
use crate::harmonics::HarmonicBasis;
use crate::stencil::{chain_rule_rows, AdvectionRow, LsProjector};

/// Gaussian kernels tolerate far worse conditioning than the projection
/// Gram before the factorization actually breaks down, so the correlation
/// matrix gets its own, looser cap.
const CORRELATION_COND_CAP: f64 = 1e15;

/// Which metric feeds the Gaussian correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationDistance {
    #[default]
    Chordal,
    Geodesic,
}

/// Gaussian correlation exp(-c d^2) for a distance d >= 0 and parameter
/// c > 0.
pub fn gaussian_correlation(d: f64, c: f64) -> Result<f64> {
    if c <= 0.0 {
        return Err(Error::config(
            "c",
            format!("correlation parameter must be positive, got {c}"),
        ));
    }
    debug_assert!(d >= 0.0);
    Ok((-c * d * d).exp())
}

/// MKLS stencil-row builder for one basis degree and correlation setup.
pub struct Mkls {
    basis: HarmonicBasis,
    c: f64,
    distance: CorrelationDistance,
    cond_cap: f64,
}

struct LocalKriging {
    chol_r: Cholesky<f64, nalgebra::Dyn>,
    p: DMatrix<f64>,
    /// Transposed Cholesky factor of R, for Q = R^{-1} P applications.
    l_t: DMatrix<f64>,
    /// Projector through C = L^{-1} P, so that
    /// Q (P^T R^{-1} P)^{-1} t = L^{-T} C (C^T C)^{-1} t.
    proj: LsProjector,
}

impl Mkls {
    pub fn new(
        degree: usize,
        c: f64,
        distance: CorrelationDistance,
        cond_cap: f64,
    ) -> Result<Self> {
        if c <= 0.0 {
            return Err(Error::config(
                "c",
                format!("correlation parameter must be positive, got {c}"),
            ));
        }
        Ok(Mkls {
            basis: HarmonicBasis::new(degree)?,
            c,
            distance,
            cond_cap,
        })
    }

    pub fn basis(&self) -> &HarmonicBasis {
        &self.basis
    }

    fn dist(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        match self.distance {
            CorrelationDistance::Chordal => chordal_distance_xyz(a, b),
            CorrelationDistance::Geodesic => geodesic_distance_xyz(a, b),
        }
    }

    fn correlation(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let d = self.dist(a, b);
        (-self.c * d * d).exp()
    }

    fn fit(&self, x: &SpherePoint, indices: &[usize], ps: &PointSet) -> Result<LocalKriging> {
        let dim = self.basis.dim();
        let size = indices.len();
        if size < dim {
            return Err(Error::StencilDeficiency {
                node: None,
                lambda: x.lambda(),
                theta: x.theta(),
                got: size,
                need: dim,
            });
        }
        let mut r = DMatrix::zeros(size, size);
        for i in 0..size {
            r[(i, i)] = 1.0;
            let pi = ps.point(indices[i]).xyz();
            for j in (i + 1)..size {
                let v = self.correlation(pi, ps.point(indices[j]).xyz());
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        let hint = "try a larger correlation parameter c (sharper kernel) or a smaller cap radius delta";
        // Cholesky with a single jitter retry before giving up
        let chol_r = match Cholesky::new(r.clone()) {
            Some(c) => c,
            None => {
                let jitter = 1e-12 * r.trace() / size as f64;
                for i in 0..size {
                    r[(i, i)] += jitter;
                }
                Cholesky::new(r).ok_or(Error::IllConditioned {
                    matrix: "MKLS correlation matrix",
                    cond: f64::INFINITY,
                    cap: CORRELATION_COND_CAP,
                    hint: Some(hint.to_string()),
                })?
            }
        };
        {
            let l = chol_r.l_dirty();
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..size {
                let d = l[(i, i)].abs();
                lo = lo.min(d);
                hi = hi.max(d);
            }
            let cond = (hi / lo).powi(2);
            if cond > CORRELATION_COND_CAP {
                return Err(Error::IllConditioned {
                    matrix: "MKLS correlation matrix",
                    cond,
                    cap: CORRELATION_COND_CAP,
                    hint: Some(hint.to_string()),
                });
            }
        }

        let mut p = DMatrix::zeros(size, dim);
        let mut row = vec![0.0; dim];
        for (j, &idx) in indices.iter().enumerate() {
            self.basis.eval_into(ps.point(idx).xyz(), &mut row);
            for (k, &v) in row.iter().enumerate() {
                p[(j, k)] = v;
            }
        }
        let l = chol_r.l();
        let c = l
            .solve_lower_triangular(&p)
            .expect("Cholesky factor has a positive diagonal");
        let proj = LsProjector::new(c, self.cond_cap, "MKLS Gram matrix", Some(hint))?;
        Ok(LocalKriging {
            chol_r,
            p,
            l_t: l.transpose(),
            proj,
        })
    }

    /// Correlation vector r(x) against the stencil nodes.
    fn correlation_vector(
        &self,
        x: [f64; 3],
        indices: &[usize],
        ps: &PointSet,
    ) -> DVector<f64> {
        DVector::from_iterator(
            indices.len(),
            indices
                .iter()
                .map(|&j| self.correlation(ps.point(j).xyz(), x)),
        )
    }

    /// Surface-gradient components of r(x): out[i][j] = (grad0 r_j(x))_i.
    fn correlation_gradient(
        &self,
        x: [f64; 3],
        indices: &[usize],
        ps: &PointSet,
    ) -> [DVector<f64>; 3] {
        let n = indices.len();
        let mut out = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
        for (j, &idx) in indices.iter().enumerate() {
            let xj = ps.point(idx).xyz();
            let grad = match self.distance {
                CorrelationDistance::Chordal => {
                    // grad0 exp(-c |x - xj|^2) = 2 c R (xj - (x . xj) x)
                    let r = self.correlation(x, xj);
                    let xdxj = dot(x, xj);
                    let f = 2.0 * self.c * r;
                    [
                        f * (xj[0] - xdxj * x[0]),
                        f * (xj[1] - xdxj * x[1]),
                        f * (xj[2] - xdxj * x[2]),
                    ]
                }
                CorrelationDistance::Geodesic => {
                    let g = geodesic_distance_xyz(x, xj);
                    if g < 1e-12 {
                        [0.0, 0.0, 0.0]
                    } else {
                        // grad0 g points away from xj: -(xj - cos g x)/sin g
                        let r = (-self.c * g * g).exp();
                        let cos_g = dot(x, xj);
                        let u = [
                            xj[0] - cos_g * x[0],
                            xj[1] - cos_g * x[1],
                            xj[2] - cos_g * x[2],
                        ];
                        let sin_g = crate::geometry::norm(u);
                        let f = 2.0 * self.c * g * r / sin_g;
                        [f * u[0], f * u[1], f * u[2]]
                    }
                }
            };
            out[0][j] = grad[0];
            out[1][j] = grad[1];
            out[2][j] = grad[2];
        }
        out
    }

    /// a(x) = s + Q G^{-1} (rhs_trend - P^T s) for s = R^{-1} rhs_corr,
    /// with the G^{-1} application factored through C = L^{-1} P.
    fn combine(
        &self,
        fit: &LocalKriging,
        rhs_corr: &DVector<f64>,
        rhs_trend: &DVector<f64>,
    ) -> Result<Vec<f64>> {
        let s = fit.chol_r.solve(rhs_corr);
        let t = rhs_trend - fit.p.transpose() * &s;
        let cz = fit.proj.apply(&t);
        let qz = fit
            .l_t
            .solve_upper_triangular(&cz)
            .expect("Cholesky factor has a positive diagonal");
        let a = s + qz;
        Ok(a.iter().copied().collect())
    }

    /// Interpolating shape functions a(x) over the stencil.
    pub fn shape_functions(
        &self,
        x: &SpherePoint,
        indices: &[usize],
        ps: &PointSet,
    ) -> Result<Vec<f64>> {
        let fit = self.fit(x, indices, ps)?;
        let r = self.correlation_vector(x.xyz(), indices, ps);
        let y = DVector::from_vec(self.basis.eval(x));
        self.combine(&fit, &r, &y)
    }

    /// Values plus the two spherical advection-derivative rows at x.
    pub fn advection_row(
        &self,
        x: &SpherePoint,
        indices: &[usize],
        ps: &PointSet,
    ) -> Result<AdvectionRow> {
        let fit = self.fit(x, indices, ps)?;
        let xyz = x.xyz();
        let r = self.correlation_vector(xyz, indices, ps);
        let y = DVector::from_vec(self.basis.eval(x));
        let a = self.combine(&fit, &r, &y)?;

        let grad_r = self.correlation_gradient(xyz, indices, ps);
        let grad_y = self.basis.eval_surface_gradient(x);
        let mut rows = Vec::with_capacity(3);
        for comp in 0..3 {
            rows.push(self.combine(
                &fit,
                &grad_r[comp],
                &DVector::from_vec(grad_y[comp].clone()),
            )?);
        }
        let (g_lambda, g_theta) = chain_rule_rows(x.lambda(), x.theta(), &rows[0], &rows[1], &rows[2]);
        Ok(AdvectionRow {
            indices: indices.to_vec(),
            a,
            g_lambda,
            g_theta,
        })
    }
}
