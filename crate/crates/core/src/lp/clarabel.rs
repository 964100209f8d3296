//! Clarabel (interior point) adapter.
//!
//! Rows are laid out as `A x + s = b` with equalities in the zero cone first,
//! followed by inequality rows and finite column bounds in the nonnegative
//! orthant.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::backend::{LpBackend, RawSolution, RawStatus};
use super::model::{LinearProgram, Relation};
use super::LpError;

#[derive(Debug, Clone)]
pub struct ClarabelBackend {
    pub max_iter: u32,
    pub tol: f64,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        ClarabelBackend { max_iter: 200, tol: 1e-9 }
    }
}

/// Where a Clarabel row came from. Constraint rows carry the sign that turns
/// the row's dual into our row multiplier.
#[derive(Clone, Copy)]
enum RowOrigin {
    Constraint(usize, f64),
    Bound,
}

#[derive(Default)]
struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    origin: Vec<RowOrigin>,
}

impl LpBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve_raw(&self, lp: &LinearProgram) -> Result<RawSolution, LpError> {
        let n = lp.num_variables();
        let mut t = Triplets::default();
        let push_row = |t: &mut Triplets, entries: &mut dyn Iterator<Item = (usize, f64)>, rhs: f64, o: RowOrigin| {
            let r = t.b.len();
            for (j, v) in entries {
                t.rows.push(r);
                t.cols.push(j);
                t.vals.push(v);
            }
            t.b.push(rhs);
            t.origin.push(o);
        };

        for (i, c) in lp.constraints().iter().enumerate() {
            if c.relation == Relation::Eq {
                push_row(&mut t, &mut c.row.entries().iter().copied(), c.rhs, RowOrigin::Constraint(i, -1.0));
            }
        }
        for j in 0..n {
            if lp.lower()[j] == lp.upper()[j] {
                push_row(&mut t, &mut std::iter::once((j, 1.0)), lp.lower()[j], RowOrigin::Bound);
            }
        }
        let zero_rows = t.b.len();
        for (i, c) in lp.constraints().iter().enumerate() {
            match c.relation {
                Relation::GreaterEq => push_row(
                    &mut t,
                    &mut c.row.entries().iter().map(|&(j, v)| (j, -v)),
                    -c.rhs,
                    RowOrigin::Constraint(i, 1.0),
                ),
                Relation::LessEq => push_row(
                    &mut t,
                    &mut c.row.entries().iter().copied(),
                    c.rhs,
                    RowOrigin::Constraint(i, -1.0),
                ),
                Relation::Eq => {}
            }
        }
        for j in 0..n {
            let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
            if lo == hi {
                continue;
            }
            if lo.is_finite() {
                push_row(&mut t, &mut std::iter::once((j, -1.0)), -lo, RowOrigin::Bound);
            }
            if hi.is_finite() {
                push_row(&mut t, &mut std::iter::once((j, 1.0)), hi, RowOrigin::Bound);
            }
        }
        let Triplets { rows, cols, vals, b, origin } = t;
        let m = b.len();

        let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
        let p = CscMatrix::<f64>::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(j, c) in lp.objective().entries() {
            q[j] = c;
        }
        let mut cones = Vec::new();
        if zero_rows > 0 {
            cones.push(SupportedConeT::ZeroConeT(zero_rows));
        }
        if m > zero_rows {
            cones.push(SupportedConeT::NonnegativeConeT(m - zero_rows));
        }
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_feas(self.tol)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .build()
            .map_err(|e| LpError::Backend(format!("clarabel settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| LpError::Backend(format!("clarabel setup: {e}")))?;
        solver.solve();
        let sol = &solver.solution;

        let row_multipliers = |z: &[f64]| {
            let mut out = vec![0.0; lp.num_constraints()];
            for (r, o) in origin.iter().enumerate() {
                if let RowOrigin::Constraint(i, sign) = *o {
                    out[i] = sign * z[r];
                }
            }
            out
        };

        let out = match sol.status {
            // Near-solutions still go through the primal check in the solver.
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let mut out = RawSolution::with_status(RawStatus::Optimal);
                out.objective = Some(sol.obj_val + lp.objective_constant());
                out.primal = Some(sol.x.clone());
                out.row_duals = Some(row_multipliers(&sol.z));
                out
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                let mut out = RawSolution::with_status(RawStatus::Infeasible);
                out.ray_rows = Some(row_multipliers(&sol.z));
                out
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                RawSolution::with_status(RawStatus::InfeasibleOrUnbounded)
            }
            other => RawSolution::with_status(RawStatus::Other(format!("clarabel status {other:?}"))),
        };
        Ok(out)
    }
}
