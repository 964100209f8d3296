use std::fmt;

use log::debug;
use serde::{Deserialize, Serialize};

use super::backend::{BackendKind, LpBackend, RawSolution, RawStatus};
use super::certificate::{certificate_from_rows, FarkasRay};
use super::model::{LinearProgram, Relation, SparseRow};
use super::LpError;

pub const DEFAULT_FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Feasible,
    Infeasible,
    Unknown,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Feasible => "feasible",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unknown => "unknown",
        })
    }
}

/// Validated verdict of a solve.
///
/// `Feasible` always carries a point within tolerance of every row and bound;
/// `Infeasible` always carries a verified Farkas ray. Anything that fails
/// those checks is reported as `Unknown` with a diagnostic.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: LpStatus,
    pub point: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub certificate: Option<FarkasRay>,
    pub diagnostic: Option<String>,
}

impl SolveOutcome {
    fn unknown(diagnostic: impl Into<String>) -> Self {
        SolveOutcome {
            status: LpStatus::Unknown,
            point: None,
            objective_value: None,
            certificate: None,
            diagnostic: Some(diagnostic.into()),
        }
    }
}

pub struct Solver {
    backend: Box<dyn LpBackend>,
    pub feas_tol: f64,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("backend", &self.backend.name())
            .field("feas_tol", &self.feas_tol)
            .finish()
    }
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(BackendKind::default())
    }
}

impl Solver {
    pub fn new(kind: BackendKind) -> Self {
        Solver::with_backend(kind.instantiate())
    }

    pub fn with_backend(backend: Box<dyn LpBackend>) -> Self {
        Solver { backend, feas_tol: DEFAULT_FEAS_TOL }
    }

    /// Backend chosen by `POLARIZE_SOLVER`.
    pub fn from_env() -> Result<Self, LpError> {
        Ok(Solver::new(BackendKind::from_env()?))
    }

    pub fn with_feas_tol(mut self, tol: f64) -> Self {
        self.feas_tol = tol;
        self
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn solve(&self, lp: &LinearProgram) -> Result<SolveOutcome, LpError> {
        lp.validate()?;
        let raw = match self.backend.solve_raw(lp) {
            Ok(raw) => raw,
            Err(LpError::Backend(msg)) => return Ok(SolveOutcome::unknown(msg)),
            Err(e) => return Err(e),
        };
        Ok(match raw.status {
            RawStatus::Optimal => self.validate_point(lp, raw),
            RawStatus::Infeasible => self.validate_infeasible(lp, raw.ray_rows.as_deref()),
            RawStatus::InfeasibleOrUnbounded => self.validate_infeasible(lp, None),
            RawStatus::Unbounded => SolveOutcome::unknown("objective unbounded below"),
            RawStatus::Other(msg) => SolveOutcome::unknown(msg),
        })
    }

    fn validate_point(&self, lp: &LinearProgram, raw: RawSolution) -> SolveOutcome {
        let Some(point) = raw.primal else {
            return SolveOutcome::unknown("backend reported optimal without a point");
        };
        let violation = lp.max_violation(&point);
        if !(violation <= self.feas_tol) {
            return SolveOutcome::unknown(format!(
                "backend point violates the program by {violation:e}"
            ));
        }
        SolveOutcome {
            status: LpStatus::Feasible,
            objective_value: Some(lp.objective_value(&point)),
            point: Some(point),
            certificate: None,
            diagnostic: None,
        }
    }

    fn validate_infeasible(&self, lp: &LinearProgram, ray_rows: Option<&[f64]>) -> SolveOutcome {
        if let Some(rows) = ray_rows {
            if let Some(ray) = certificate_from_rows(lp, rows, self.feas_tol) {
                return infeasible(ray);
            }
            debug!("backend ray failed verification");
        }
        match self.relaxed_fixing_certificate(lp) {
            Ok(Some(ray)) => return infeasible(ray),
            Ok(None) => debug!("relaxed fixing gave no certificate; trying elastic program"),
            Err(e) => debug!("relaxed fixing failed: {e}"),
        }
        match self.elastic_certificate(lp) {
            Ok(Some(ray)) => infeasible(ray),
            Ok(None) => SolveOutcome::unknown("infeasibility verdict without a verifiable certificate"),
            Err(e) => SolveOutcome::unknown(format!("elastic program failed: {e}")),
        }
    }

    /// Frees every column fixed at a nonzero value to the segment between 0
    /// and that value, then pushes those columns toward their fixed values.
    /// An optimum strictly short of them often comes with row duals that
    /// complete to a ray for the original program. The relaxed program is
    /// usually much easier for presolve than the original.
    fn relaxed_fixing_certificate(&self, lp: &LinearProgram) -> Result<Option<FarkasRay>, LpError> {
        let mut relaxed = lp.clone();
        let mut cost = Vec::new();
        for j in 0..lp.num_variables() {
            let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
            if lo == hi && lo != 0.0 {
                relaxed.set_bounds(j, lo.min(0.0), lo.max(0.0));
                cost.push((j, -1.0 / lo));
            }
        }
        if cost.is_empty() {
            return Ok(None);
        }
        relaxed.set_objective(SparseRow::from_pairs(cost.iter().copied()), 0.0);
        let raw = self.backend.solve_raw(&relaxed)?;
        let target = -(cost.len() as f64);
        if raw.status != RawStatus::Optimal || raw.objective.unwrap_or(target) <= target + self.feas_tol {
            return Ok(None);
        }
        Ok(raw
            .row_duals
            .and_then(|duals| certificate_from_rows(lp, &duals, self.feas_tol)))
    }

    /// Minimizes total constraint violation; the row duals of the optimum
    /// form a Farkas ray whenever the minimum is positive.
    fn elastic_certificate(&self, lp: &LinearProgram) -> Result<Option<FarkasRay>, LpError> {
        let n = lp.num_variables();
        let mut elastic = LinearProgram::new(format!("{}_elastic", lp.name));
        for j in 0..n {
            elastic.add_variable(format!("x{j}"), lp.lower()[j], lp.upper()[j]);
        }
        let mut cost = Vec::new();
        for (i, c) in lp.constraints().iter().enumerate() {
            let mut entries = c.row.entries().to_vec();
            if c.relation != Relation::LessEq {
                let p = elastic.add_variable(format!("p{i}"), 0.0, f64::INFINITY);
                entries.push((p, 1.0));
                cost.push((p, 1.0));
            }
            if c.relation != Relation::GreaterEq {
                let q = elastic.add_variable(format!("q{i}"), 0.0, f64::INFINITY);
                entries.push((q, -1.0));
                cost.push((q, 1.0));
            }
            elastic.add_constraint(SparseRow::from_pairs(entries), c.relation, c.rhs);
        }
        elastic.set_objective(SparseRow::from_pairs(cost), 0.0);
        let raw = self.backend.solve_raw(&elastic)?;
        if raw.status != RawStatus::Optimal || raw.objective.unwrap_or(0.0) <= self.feas_tol {
            return Ok(None);
        }
        Ok(raw
            .row_duals
            .and_then(|duals| certificate_from_rows(lp, &duals, self.feas_tol)))
    }
}

fn infeasible(ray: FarkasRay) -> SolveOutcome {
    SolveOutcome {
        status: LpStatus::Infeasible,
        point: None,
        objective_value: None,
        certificate: Some(ray),
        diagnostic: None,
    }
}

/// Solves with the backend selected by `POLARIZE_SOLVER`.
pub fn solve(lp: &LinearProgram, feas_tol: f64) -> Result<SolveOutcome, LpError> {
    Ok(Solver::from_env()?.with_feas_tol(feas_tol).solve(lp)?)
}
