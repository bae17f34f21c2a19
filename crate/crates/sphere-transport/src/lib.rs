//! Meshless solver for the time-dependent transport equation on the unit
//! sphere in spherical coordinates.
//!
//! The spatial derivative (v1 / cos theta) du/dlambda + v2 du/dtheta is
//! discretized at scattered nodes by either of two local approximations
//! built from spherical-cap stencils and a spherical-harmonic basis:
//!
//! - **GMLS**: generalized moving least squares, a Wendland-weighted
//!   projection whose derivative stencils are exact on harmonics of
//!   degree at most m;
//! - **MKLS**: moving kriging least squares, an interpolating variant
//!   (Kronecker-delta shape functions) with a Gaussian correlation model.
//!
//! Time is integrated implicitly with one backward-Euler step followed by
//! BDF2; each step solves a sparse system with BiCGSTAB preconditioned by
//! zero-fill ILU. The crate ships the three standard benchmark flows
//! (solid-body rotation of a cosine bell, vortex roll-up, reversing
//! deformational flow), the equal-weight quadrature error norm, and a
//! batch harness for runs and convergence sweeps.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── point_sets.rs            # phyllotaxis nodes, file round trips, cap stencils
//! ├── shape_functions.rs       # GMLS/MKLS reproduction and derivative accuracy
//! ├── sparse_solvers.rs        # CSR assembly, ILU(0), BiCGSTAB on a real system
//! ├── solid_body_rotation.rs   # benchmark 1: bell carried over both poles
//! ├── vortex_rollup.rs         # benchmark 2: convergence against the exact vortex
//! ├── deformational_flow.rs    # benchmark 3: reversing flow returns the tracer
//! └── convergence_sweep.rs     # table of l2 errors over a range of N
//! ```
//!
//! Run one with `cargo run --release --example vortex_rollup`.
//!
//! The same functionality is scriptable through the thin `sphere-transport`
//! binary (`run`, `sweep`, `gen-points`, `validate-config`).

pub mod error;
pub mod geometry;
pub mod gmls;
pub mod harmonics;
pub mod harness;
pub mod mkls;
pub mod solver;
pub mod sparse;
mod stencil;
pub mod testcases;

pub use error::{Error, Result};
pub use geometry::{
    cap_neighbors, cartesian_to_spherical, chordal_distance, generate_phyllotaxis,
    geodesic_distance, load_point_set, spherical_to_cartesian, CapGrid, Neighborhood,
    PointFormat, PointSet, SpherePoint,
};
pub use gmls::{wendland_weight, Gmls};
pub use harmonics::{basis_dim, eval_basis, eval_surface_gradient_basis, HarmonicBasis};
pub use mkls::{gaussian_correlation, CorrelationDistance, Mkls};
pub use solver::{
    assemble_operators, evaluate_at, run_simulation, system_matrix_bdf1, system_matrix_bdf2,
    DiscreteOperators, Method, RunReport, SimulationState, SolverConfig,
};
pub use sparse::{bicgstab, Ilu0Factors, SolveReport, SparseMatrix};
pub use stencil::AdvectionRow;
pub use testcases::{
    deformational_case, l2_error, l2_norm, solid_body_case, vortex_case, TestCase,
};
