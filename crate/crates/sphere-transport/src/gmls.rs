//! Generalized moving least squares shape functions on the sphere.
//!
//! At an evaluation point x with cap stencil I(x), the shape-function
//! vector is
//!
//!   a*(x) = W P (P^T W P)^{-1} Y(x),
//!
//! with P the stencil-by-basis matrix of spherical harmonics, W the
//! diagonal of Wendland weights phi(dist/delta) and Y(x) the basis at x.
//! Derivative rows replace Y(x) by the surface-gradient components
//! grad0 Y(x); the Gram factorization and weights are shared between the
//! value and derivative rows of one evaluation point. Any harmonic of
//! degree at most m is reproduced exactly, in both value and surface
//! gradient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, PointSet, SpherePoint};
use crate::harmonics::HarmonicBasis;
use crate::stencil::{chain_rule_rows, AdvectionRow, LsProjector};

/// Wendland C^2 weight: (1 - r)^4 (4r + 1) on [0, 1], zero beyond.
pub fn wendland_weight(r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    if r >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r;
        let s2 = s * s;
        s2 * s2 * (4.0 * r + 1.0)
    }
}

/// GMLS stencil-row builder for one basis degree and cap radius.
pub struct Gmls {
    basis: HarmonicBasis,
    delta: f64,
    cond_cap: f64,
}

struct LocalFit {
    sqrt_weights: Vec<f64>,
    proj: LsProjector,
}

impl Gmls {
    pub fn new(degree: usize, delta: f64, cond_cap: f64) -> Result<Self> {
        Ok(Gmls {
            basis: HarmonicBasis::new(degree)?,
            delta,
            cond_cap,
        })
    }

    pub fn basis(&self) -> &HarmonicBasis {
        &self.basis
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn fit(&self, x: &SpherePoint, indices: &[usize], ps: &PointSet) -> Result<LocalFit> {
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
        // factor sqrt(W) P; the row for a right-hand side y is then
        // W P (P^T W P)^{-1} y = sqrt(W) * projector(y)
        let mut sqrt_weights = Vec::with_capacity(size);
        let mut b = DMatrix::zeros(size, dim);
        let mut row = vec![0.0; dim];
        for (j, &idx) in indices.iter().enumerate() {
            let node = ps.point(idx);
            let sw = wendland_weight(geodesic_distance(x, node) / self.delta).sqrt();
            sqrt_weights.push(sw);
            self.basis.eval_into(node.xyz(), &mut row);
            for (k, &v) in row.iter().enumerate() {
                b[(j, k)] = sw * v;
            }
        }
        let proj = LsProjector::new(b, self.cond_cap, "GMLS Gram matrix", None)?;
        Ok(LocalFit { sqrt_weights, proj })
    }

    /// Row of W P (P^T W P)^{-1} rhs for one right-hand side.
    fn apply(&self, fit: &LocalFit, rhs: &DVector<f64>) -> Result<Vec<f64>> {
        let out = fit.proj.apply(rhs);
        Ok(fit
            .sqrt_weights
            .iter()
            .zip(out.iter())
            .map(|(&sw, &v)| sw * v)
            .collect())
    }

    /// Shape-function values a*(x) over the stencil.
    pub fn shape_functions(
        &self,
        x: &SpherePoint,
        indices: &[usize],
        ps: &PointSet,
    ) -> Result<Vec<f64>> {
        let fit = self.fit(x, indices, ps)?;
        let y = DVector::from_vec(self.basis.eval(x));
        self.apply(&fit, &y)
    }

    /// Surface-gradient shape functions: the three component rows that
    /// recover (grad0 u)(x) from nodal samples.
    pub fn gradient_shape_functions(
        &self,
        x: &SpherePoint,
        indices: &[usize],
        ps: &PointSet,
    ) -> Result<[Vec<f64>; 3]> {
        let fit = self.fit(x, indices, ps)?;
        self.gradient_rows(&fit, x)
    }

    fn gradient_rows(&self, fit: &LocalFit, x: &SpherePoint) -> Result<[Vec<f64>; 3]> {
        let g = self.basis.eval_surface_gradient(x);
        Ok([
            self.apply(fit, &DVector::from_vec(g[0].clone()))?,
            self.apply(fit, &DVector::from_vec(g[1].clone()))?,
            self.apply(fit, &DVector::from_vec(g[2].clone()))?,
        ])
    }

    /// Values plus the two spherical advection-derivative rows at x.
    pub fn advection_row(
        &self,
        x: &SpherePoint,
        indices: &[usize],
        ps: &PointSet,
    ) -> Result<AdvectionRow> {
        let fit = self.fit(x, indices, ps)?;
        let y = DVector::from_vec(self.basis.eval(x));
        let a = self.apply(&fit, &y)?;
        let [g1, g2, g3] = self.gradient_rows(&fit, x)?;
        let (g_lambda, g_theta) = chain_rule_rows(x.lambda(), x.theta(), &g1, &g2, &g3);
        Ok(AdvectionRow {
            indices: indices.to_vec(),
            a,
            g_lambda,
            g_theta,
        })
    }
}
