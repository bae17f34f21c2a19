//! Global operator assembly and the implicit time loop.
//!
//! Assembly walks every node, builds its cap stencil and asks the active
//! approximation (GMLS or MKLS) for the shape-function row and the two
//! advection-derivative rows, yielding the N x N sparse operators A, B1
//! and B2. Row i of A holds a_j(x_i); row i of B1 holds the pole-safe
//! (1/cos theta_i) d a_j / d lambda entries; row i of B2 the
//! d a_j / d theta entries. Per-node work is independent, so rows are
//! computed in parallel; outputs do not depend on the thread count.

mod time_loop;

pub use time_loop::{
    evaluate_at, run_simulation, step_bdf2, step_first, RunReport, SimulationState, StepSystem,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CapGrid, PointSet};
use crate::gmls::Gmls;
use crate::harmonics::basis_dim;
use crate::mkls::{CorrelationDistance, Mkls};
use crate::sparse::SparseMatrix;
use crate::stencil::AdvectionRow;

/// Spatial discretization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gmls,
    Mkls,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Gmls => write!(f, "GMLS"),
            Method::Mkls => write!(f, "MKLS"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gmls" => Ok(Method::Gmls),
            "mkls" => Ok(Method::Mkls),
            other => Err(Error::config(
                "method",
                format!("unknown method `{other}`; valid methods are GMLS, MKLS"),
            )),
        }
    }
}

/// Default stencil-sufficiency factor: every node's cap must hold at
/// least this many times the basis dimension before assembly proceeds.
pub const DEFAULT_STENCIL_SAFETY: f64 = 2.0;

/// Discretization parameters. The cap radius is delta = delta_multiplier
/// times h and the kriging parameter c = c_multiplier / h, with
/// h = N^(-1/2) the nominal fill distance.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    /// Harmonic degree m of the local basis.
    pub degree: usize,
    pub delta_multiplier: f64,
    /// MKLS only.
    pub c_multiplier: f64,
    /// Time step (model time).
    pub dt: f64,
    /// Linear-solver relative tolerance on the true residual.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Metric inside the MKLS Gaussian correlation.
    pub correlation_distance: CorrelationDistance,
    /// Condition-estimate cap for the local Gram solves.
    pub cond_cap: f64,
    /// Stencil-sufficiency factor: assembly requires
    /// |I(x_i)| >= stencil_safety * (m + 1)^2 at every node.
    pub stencil_safety: f64,
    /// Number of backward-Euler substeps composing the first time step.
    /// The starter is first order, so its local error contributes at the
    /// same O(dt^2) as the whole BDF2 history; sub-stepping shrinks that
    /// contribution by the substep count. 1 gives the plain single step.
    pub first_step_substeps: usize,
}

impl SolverConfig {
    pub fn new(method: Method, dt: f64) -> Self {
        SolverConfig {
            method,
            degree: 3,
            delta_multiplier: 12.0,
            c_multiplier: 20.0,
            dt,
            rel_tol: 1e-10,
            max_iter: 1000,
            correlation_distance: CorrelationDistance::Chordal,
            cond_cap: 1e12,
            stencil_safety: DEFAULT_STENCIL_SAFETY,
            first_step_substeps: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 {
            return Err(Error::config("dt", "time step must be positive"));
        }
        if self.delta_multiplier <= 0.0 {
            return Err(Error::config(
                "delta_multiplier",
                "cap radius multiplier must be positive",
            ));
        }
        if self.method == Method::Mkls && self.c_multiplier <= 0.0 {
            return Err(Error::config(
                "c_multiplier",
                "correlation multiplier must be positive",
            ));
        }
        if self.rel_tol <= 0.0 {
            return Err(Error::config("rel_tol", "tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "need at least one iteration"));
        }
        if self.cond_cap <= 1.0 {
            return Err(Error::config("cond_cap", "condition cap must exceed 1"));
        }
        if self.stencil_safety < 1.0 {
            return Err(Error::config(
                "stencil_safety",
                "stencil factor below 1 would allow underdetermined fits",
            ));
        }
        if self.first_step_substeps == 0 {
            return Err(Error::config(
                "first_step_substeps",
                "the first step needs at least one substep",
            ));
        }
        Ok(())
    }

    /// Required stencil size at assembly: stencil_safety * (m + 1)^2,
    /// never below the basis dimension itself.
    pub fn min_stencil(&self) -> usize {
        let dim = basis_dim(self.degree);
        ((self.stencil_safety * dim as f64).ceil() as usize).max(dim)
    }
}

/// Either spatial approximation behind one row-building interface.
pub(crate) enum RowBuilder {
    Gmls(Gmls),
    Mkls(Mkls),
}

impl RowBuilder {
    pub(crate) fn from_config(cfg: &SolverConfig, fill_distance: f64) -> Result<Self> {
        let delta = cfg.delta_multiplier * fill_distance;
        match cfg.method {
            Method::Gmls => Ok(RowBuilder::Gmls(Gmls::new(cfg.degree, delta, cfg.cond_cap)?)),
            Method::Mkls => Ok(RowBuilder::Mkls(Mkls::new(
                cfg.degree,
                cfg.c_multiplier / fill_distance,
                cfg.correlation_distance,
                cfg.cond_cap,
            )?)),
        }
    }

    pub(crate) fn advection_row(
        &self,
        x: &crate::geometry::SpherePoint,
        indices: &[usize],
        ps: &PointSet,
    ) -> Result<AdvectionRow> {
        match self {
            RowBuilder::Gmls(g) => g.advection_row(x, indices, ps),
            RowBuilder::Mkls(m) => m.advection_row(x, indices, ps),
        }
    }

    pub(crate) fn shape_functions(
        &self,
        x: &crate::geometry::SpherePoint,
        indices: &[usize],
        ps: &PointSet,
    ) -> Result<Vec<f64>> {
        match self {
            RowBuilder::Gmls(g) => g.shape_functions(x, indices, ps),
            RowBuilder::Mkls(m) => m.shape_functions(x, indices, ps),
        }
    }
}

/// The assembled global operators of one discretization.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub a: SparseMatrix,
    pub b1: SparseMatrix,
    pub b2: SparseMatrix,
    delta: f64,
    max_stencil: usize,
}

impl DiscreteOperators {
    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn max_stencil(&self) -> usize {
        self.max_stencil
    }
}

/// Rank assembly failures so the most telling one gets reported: the
/// smallest deficient stencil first, then the worst conditioning.
fn worst_error(errors: Vec<Error>) -> Error {
    fn rank(e: &Error) -> (u8, f64) {
        match e {
            Error::StencilDeficiency { got, .. } => (0, *got as f64),
            Error::IllConditioned { cond, .. } => (1, -cond),
            _ => (2, 0.0),
        }
    }
    errors
        .into_iter()
        .min_by(|a, b| {
            let (ca, ka) = rank(a);
            let (cb, kb) = rank(b);
            ca.cmp(&cb)
                .then(ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal))
        })
        .expect("called with at least one error")
}

/// Build the global A, B1, B2 operators (Algorithm 1 of the scheme).
pub fn assemble_operators(ps: &PointSet, cfg: &SolverConfig) -> Result<DiscreteOperators> {
    cfg.validate()?;
    let h = ps.fill_distance();
    let delta = cfg.delta_multiplier * h;
    let builder = RowBuilder::from_config(cfg, h)?;
    let grid = CapGrid::new(ps, delta)?;
    let need = cfg.min_stencil();

    let results: Vec<Result<AdvectionRow>> = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let nbhd = grid.neighborhood(i);
            if nbhd.indices.len() < need {
                let p = ps.point(i);
                return Err(Error::StencilDeficiency {
                    node: Some(i),
                    lambda: p.lambda(),
                    theta: p.theta(),
                    got: nbhd.indices.len(),
                    need,
                });
            }
            builder
                .advection_row(ps.point(i), &nbhd.indices, ps)
                .map_err(|e| match e {
                    Error::StencilDeficiency {
                        lambda,
                        theta,
                        got,
                        need,
                        ..
                    } => Error::StencilDeficiency {
                        node: Some(i),
                        lambda,
                        theta,
                        got,
                        need,
                    },
                    Error::IllConditioned {
                        matrix,
                        cond,
                        cap,
                        hint,
                    } => Error::IllConditioned {
                        matrix,
                        cond,
                        cap,
                        hint: Some(match hint {
                            Some(h) => format!("node {i}; {h}"),
                            None => format!("node {i}"),
                        }),
                    },
                    other => other,
                })
        })
        .collect();

    let mut rows = Vec::with_capacity(ps.len());
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(worst_error(errors));
    }

    let n = ps.len();
    let max_stencil = rows.iter().map(|r| r.indices.len()).max().unwrap_or(0);
    let mut a_rows = Vec::with_capacity(n);
    let mut b1_rows = Vec::with_capacity(n);
    let mut b2_rows = Vec::with_capacity(n);
    for row in rows {
        a_rows.push((row.indices.clone(), row.a));
        b1_rows.push((row.indices.clone(), row.g_lambda));
        b2_rows.push((row.indices, row.g_theta));
    }
    Ok(DiscreteOperators {
        a: SparseMatrix::from_sorted_rows(n, a_rows),
        b1: SparseMatrix::from_sorted_rows(n, b1_rows),
        b2: SparseMatrix::from_sorted_rows(n, b2_rows),
        delta,
        max_stencil,
    })
}

/// First-step system S = A + dt (diag(v1) B1 + diag(v2) B2).
///
/// The time step multiplies both advection terms, matching the
/// semi-discrete backward Euler form.
pub fn system_matrix_bdf1(
    ops: &DiscreteOperators,
    v1: &[f64],
    v2: &[f64],
    dt: f64,
) -> Result<SparseMatrix> {
    ops.a.combine_scaled(1.0, dt, &ops.b1, &ops.b2, v1, v2)
}

/// BDF2 system S = 3A + 2 dt (diag(v1) B1 + diag(v2) B2).
pub fn system_matrix_bdf2(
    ops: &DiscreteOperators,
    v1: &[f64],
    v2: &[f64],
    dt: f64,
) -> Result<SparseMatrix> {
    ops.a.combine_scaled(3.0, 2.0 * dt, &ops.b1, &ops.b2, v1, v2)
}
