use std::path::PathBuf;

use thiserror::Error;

use crate::sparse::SolveReport;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("angles out of range: lambda = {lambda}, theta = {theta} (expect lambda in [-pi, pi], theta in [-pi/2, pi/2])")]
    AngleOutOfRange { lambda: f64, theta: f64 },

    #[error("vector is not on the unit sphere: |v| = {norm}")]
    NonUnitVector { norm: f64 },

    #[error("point set needs at least {min} points, got {got}")]
    TooFewPoints { got: usize, min: usize },

    #[error("duplicate points at indices {first} and {second}")]
    DuplicatePoints { first: usize, second: usize },

    #[error("{path}:{line}: {message}")]
    PointFileFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: point is not a unit vector (|v| = {norm}, tolerance 1e-6)")]
    PointFileData {
        path: PathBuf,
        line: usize,
        norm: f64,
    },

    #[error("stencil at ({lambda:.6}, {theta:.6}){} has {got} points, needs at least {need}", node.map(|i| format!(" (node {i})")).unwrap_or_default())]
    StencilDeficiency {
        node: Option<usize>,
        lambda: f64,
        theta: f64,
        got: usize,
        need: usize,
    },

    #[error("{matrix} is ill-conditioned (condition estimate {cond:.3e} exceeds cap {cap:.1e}){}", hint.as_deref().map(|h| format!("; {h}")).unwrap_or_default())]
    IllConditioned {
        matrix: &'static str,
        cond: f64,
        cap: f64,
        hint: Option<String>,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix entry ({row}, {col}) out of bounds for a {n_rows}x{n_cols} matrix")]
    EntryOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("matrix must be square for this operation ({n_rows}x{n_cols})")]
    NotSquare { n_rows: usize, n_cols: usize },

    #[error("row {row} has no structural diagonal entry")]
    MissingDiagonal { row: usize },

    #[error("zero pivot in row {row} during ILU(0) factorization (|pivot| = {pivot:.3e})")]
    ZeroPivot { row: usize, pivot: f64 },

    #[error("linear solve failed at step {step} (t = {time}): {iterations} iterations, relative residual {residual:.3e}")]
    StepSolveFailed {
        step: usize,
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid configuration for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn from_report(step: usize, time: f64, report: &SolveReport) -> Self {
        Error::StepSolveFailed {
            step,
            time,
            iterations: report.iterations,
            residual: report.final_relative_residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
