//! Solver-agnostic linear programs: model, validated solving, Farkas
//! certificates and file export.

mod backend;
mod certificate;
mod clarabel;
mod export;
mod highs;
mod model;
mod solve;

use thiserror::Error;

pub use backend::{BackendKind, LpBackend, RawSolution, RawStatus, SOLVER_ENV};
pub use certificate::{
    certificate_from_rows, complete_from_rows, verify_certificate, Aggregate, FarkasRay,
};
pub use clarabel::ClarabelBackend;
pub use export::{export, lp_text_name, write_lp, write_mps, ExportFormat};
pub use highs::HighsBackend;
pub use model::{Constraint, LinearProgram, Relation, SparseRow};
pub use solve::{solve, LpStatus, SolveOutcome, Solver, DEFAULT_FEAS_TOL};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("unknown solver backend {0:?} (expected highs or clarabel)")]
    UnknownBackend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
