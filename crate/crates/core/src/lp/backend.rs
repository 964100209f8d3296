use std::fmt;
use std::str::FromStr;

use super::clarabel::ClarabelBackend;
use super::highs::HighsBackend;
use super::model::LinearProgram;
use super::LpError;

/// Environment variable naming the backend adapter (`highs` or `clarabel`).
pub const SOLVER_ENV: &str = "POLARIZE_SOLVER";

#[derive(Debug, Clone, PartialEq)]
pub enum RawStatus {
    Optimal,
    Infeasible,
    Unbounded,
    InfeasibleOrUnbounded,
    Other(String),
}

/// Unvalidated output of a backend run.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: RawStatus,
    pub primal: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Row duals of an optimal solve, any sign convention.
    pub row_duals: Option<Vec<f64>>,
    /// Row part of an infeasibility ray, any sign convention.
    pub ray_rows: Option<Vec<f64>>,
}

impl RawSolution {
    pub fn with_status(status: RawStatus) -> Self {
        RawSolution {
            status,
            primal: None,
            objective: None,
            row_duals: None,
            ray_rows: None,
        }
    }
}

/// An LP solver adapter. Implementations must be safe to call from several
/// threads at once on distinct programs.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve_raw(&self, lp: &LinearProgram) -> Result<RawSolution, LpError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    #[default]
    Highs,
    Clarabel,
}

impl BackendKind {
    /// Reads [`SOLVER_ENV`], defaulting to HiGHS when unset.
    pub fn from_env() -> Result<Self, LpError> {
        match std::env::var(SOLVER_ENV) {
            Ok(v) if !v.trim().is_empty() => v.parse(),
            _ => Ok(BackendKind::Highs),
        }
    }

    pub fn instantiate(self) -> Box<dyn LpBackend> {
        match self {
            BackendKind::Highs => Box::new(HighsBackend::default()),
            BackendKind::Clarabel => Box::new(ClarabelBackend::default()),
        }
    }
}

impl FromStr for BackendKind {
    type Err = LpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "highs" => Ok(BackendKind::Highs),
            "clarabel" => Ok(BackendKind::Clarabel),
            other => Err(LpError::UnknownBackend(other.to_string())),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Highs => "highs",
            BackendKind::Clarabel => "clarabel",
        })
    }
}
