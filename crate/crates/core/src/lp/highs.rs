//! HiGHS adapter over the raw C API.

use std::ffi::{c_void, CString};
use std::path::Path;

use highs_sys::*;
use log::debug;

use super::backend::{LpBackend, RawSolution, RawStatus};
use super::model::{LinearProgram, Relation, SparseRow};
use super::LpError;

const MATRIX_ROWWISE: HighsInt = 2;
const SENSE_MINIMIZE: HighsInt = 1;
/// Bit of the dependent-equations rule in `presolve_rule_off`.
const PRESOLVE_DEPENDENT_EQUATIONS: i32 = 1 << 10;

/// Owned HiGHS instance.
struct Highs(*mut c_void);

// Each instance is used by one thread at a time; HiGHS keeps no shared
// mutable state between instances once `threads` is pinned to 1.
unsafe impl Send for Highs {}

impl Highs {
    fn new() -> Self {
        Highs(unsafe { Highs_create() })
    }

    fn set_bool(&mut self, option: &str, value: bool) -> Result<(), LpError> {
        let key = CString::new(option).unwrap();
        check(unsafe { Highs_setBoolOptionValue(self.0, key.as_ptr(), value as HighsInt) }, option)
    }

    fn set_int(&mut self, option: &str, value: i32) -> Result<(), LpError> {
        let key = CString::new(option).unwrap();
        check(unsafe { Highs_setIntOptionValue(self.0, key.as_ptr(), value as HighsInt) }, option)
    }

    fn set_double(&mut self, option: &str, value: f64) -> Result<(), LpError> {
        let key = CString::new(option).unwrap();
        check(unsafe { Highs_setDoubleOptionValue(self.0, key.as_ptr(), value) }, option)
    }

    fn set_string(&mut self, option: &str, value: &str) -> Result<(), LpError> {
        let key = CString::new(option).unwrap();
        let val = CString::new(value).unwrap();
        check(unsafe { Highs_setStringOptionValue(self.0, key.as_ptr(), val.as_ptr()) }, option)
    }

    fn model_status(&self) -> HighsInt {
        unsafe { Highs_getModelStatus(self.0) }
    }

    fn int_info(&self, name: &str) -> Option<HighsInt> {
        let key = CString::new(name).ok()?;
        let mut value: HighsInt = 0;
        let status = unsafe { Highs_getIntInfoValue(self.0, key.as_ptr(), &mut value) };
        (status != kHighsStatusError).then_some(value)
    }

    fn num_col(&self) -> usize {
        unsafe { Highs_getNumCol(self.0) as usize }
    }

    fn num_row(&self) -> usize {
        unsafe { Highs_getNumRow(self.0) as usize }
    }
}

impl Drop for Highs {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.0) }
    }
}

fn check(status: HighsInt, what: &str) -> Result<(), LpError> {
    if status == kHighsStatusError {
        Err(LpError::Backend(format!("HiGHS call failed: {what}")))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HighsBackend {
    /// `choose`, `simplex` or `ipm`.
    pub solver: String,
    pub presolve: bool,
    pub time_limit: Option<f64>,
    pub primal_feasibility_tolerance: f64,
    pub dual_feasibility_tolerance: f64,
    /// Seconds of simplex on a program with no objective before switching
    /// to interior point without crossover. Large feasible hierarchy LPs
    /// can take many minutes in simplex.
    pub interior_after: Option<f64>,
}

impl Default for HighsBackend {
    fn default() -> Self {
        let solver = std::env::var("POLARIZE_HIGHS_SOLVER").unwrap_or_else(|_| "choose".to_string());
        HighsBackend {
            interior_after: (solver == "choose").then_some(15.0),
            solver,
            presolve: true,
            time_limit: None,
            primal_feasibility_tolerance: 1e-9,
            dual_feasibility_tolerance: 1e-9,
        }
    }
}

impl HighsBackend {
    fn configure(&self, h: &mut Highs, presolve: bool) -> Result<(), LpError> {
        let verbose = std::env::var_os("POLARIZE_HIGHS_LOG").is_some();
        h.set_bool("output_flag", verbose)?;
        h.set_int("threads", 1)?;
        h.set_string("parallel", "off")?;
        h.set_string("solver", &self.solver)?;
        h.set_string("presolve", if presolve { "on" } else { "off" })?;
        h.set_double("primal_feasibility_tolerance", self.primal_feasibility_tolerance)?;
        h.set_double("dual_feasibility_tolerance", self.dual_feasibility_tolerance)?;
        if let Some(limit) = self.time_limit {
            h.set_double("time_limit", limit)?;
        }
        Ok(())
    }

    fn pass(&self, h: &mut Highs, lp: &LinearProgram) -> Result<(), LpError> {
        let num_col = lp.num_variables();
        let num_row = lp.num_constraints();
        let mut cost = vec![0.0; num_col];
        for &(j, c) in lp.objective().entries() {
            cost[j] = c;
        }
        let mut row_lower = Vec::with_capacity(num_row);
        let mut row_upper = Vec::with_capacity(num_row);
        let mut a_start: Vec<HighsInt> = Vec::with_capacity(num_row + 1);
        let mut a_index: Vec<HighsInt> = Vec::with_capacity(lp.num_nonzeros());
        let mut a_value = Vec::with_capacity(lp.num_nonzeros());
        for c in lp.constraints() {
            let (lo, hi) = match c.relation {
                Relation::Eq => (c.rhs, c.rhs),
                Relation::GreaterEq => (c.rhs, f64::INFINITY),
                Relation::LessEq => (f64::NEG_INFINITY, c.rhs),
            };
            row_lower.push(lo);
            row_upper.push(hi);
            a_start.push(a_index.len() as HighsInt);
            for &(j, v) in c.row.entries() {
                a_index.push(j as HighsInt);
                a_value.push(v);
            }
        }
        let status = unsafe {
            Highs_passLp(
                h.0,
                num_col as HighsInt,
                num_row as HighsInt,
                a_value.len() as HighsInt,
                MATRIX_ROWWISE,
                SENSE_MINIMIZE,
                lp.objective_constant(),
                cost.as_ptr(),
                lp.lower().as_ptr(),
                lp.upper().as_ptr(),
                row_lower.as_ptr(),
                row_upper.as_ptr(),
                a_start.as_ptr(),
                a_index.as_ptr(),
                a_value.as_ptr(),
            )
        };
        check(status, "passLp")
    }

    fn run(&self, h: &mut Highs) -> Result<RawSolution, LpError> {
        check(unsafe { Highs_run(h.0) }, "run")?;
        debug!(
            "HiGHS status {} after {:?} simplex and {:?} ipm iterations",
            h.model_status(),
            h.int_info("simplex_iteration_count"),
            h.int_info("ipm_iteration_count")
        );
        let num_col = h.num_col();
        let num_row = h.num_row();
        let status = h.model_status();
        let mut out = match status {
            MODEL_STATUS_OPTIMAL => RawSolution::with_status(RawStatus::Optimal),
            MODEL_STATUS_INFEASIBLE => RawSolution::with_status(RawStatus::Infeasible),
            MODEL_STATUS_UNBOUNDED => RawSolution::with_status(RawStatus::Unbounded),
            MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => {
                RawSolution::with_status(RawStatus::InfeasibleOrUnbounded)
            }
            MODEL_STATUS_MODEL_EMPTY if num_row == 0 && num_col == 0 => {
                RawSolution::with_status(RawStatus::Optimal)
            }
            other => RawSolution::with_status(RawStatus::Other(format!("HiGHS model status {other}"))),
        };
        match out.status {
            RawStatus::Optimal => {
                let mut col_value = vec![0.0; num_col];
                let mut col_dual = vec![0.0; num_col];
                let mut row_value = vec![0.0; num_row];
                let mut row_dual = vec![0.0; num_row];
                check(
                    unsafe {
                        Highs_getSolution(
                            h.0,
                            col_value.as_mut_ptr(),
                            col_dual.as_mut_ptr(),
                            row_value.as_mut_ptr(),
                            row_dual.as_mut_ptr(),
                        )
                    },
                    "getSolution",
                )?;
                out.objective = Some(unsafe { Highs_getObjectiveValue(h.0) });
                out.primal = Some(col_value);
                out.row_duals = Some(row_dual);
            }
            // Without a basis HiGHS would re-solve from scratch to find a ray,
            // which costs far more than the other certificate routes.
            RawStatus::Infeasible if h.int_info("basis_validity") == Some(1) => {
                let mut has_ray: HighsInt = 0;
                let mut ray = vec![0.0; num_row];
                let status = unsafe { Highs_getDualRay(h.0, &mut has_ray, ray.as_mut_ptr()) };
                if status != kHighsStatusError && has_ray != 0 {
                    out.ray_rows = Some(ray);
                }
            }
            _ => {}
        }
        Ok(out)
    }

    /// Interior point without crossover. HiGHS often labels the result
    /// unknown on these programs even when the point is feasible, so the
    /// point is checked here and kept only if it satisfies every row.
    fn interior_point(&self, lp: &LinearProgram) -> Result<Option<Vec<f64>>, LpError> {
        let mut h = Highs::new();
        self.configure(&mut h, self.presolve)?;
        h.set_string("solver", "ipm")?;
        h.set_string("run_crossover", "off")?;
        // The point is checked below, so the default tolerances are enough.
        h.set_double("primal_feasibility_tolerance", 1e-7)?;
        h.set_double("dual_feasibility_tolerance", 1e-7)?;
        // Dropping numerically dependent equations in presolve left points
        // that violate the original rows by ~1e-3 after postsolve.
        h.set_int("presolve_rule_off", PRESOLVE_DEPENDENT_EQUATIONS)?;
        self.pass(&mut h, lp)?;
        check(unsafe { Highs_run(h.0) }, "run")?;
        let num_col = h.num_col();
        let num_row = h.num_row();
        if num_col == 0 || h.int_info("primal_solution_status").unwrap_or(0) == 0 {
            return Ok(None);
        }
        let mut col_value = vec![0.0; num_col];
        let mut col_dual = vec![0.0; num_col];
        let mut row_value = vec![0.0; num_row];
        let mut row_dual = vec![0.0; num_row];
        let status = unsafe {
            Highs_getSolution(h.0, col_value.as_mut_ptr(), col_dual.as_mut_ptr(), row_value.as_mut_ptr(), row_dual.as_mut_ptr())
        };
        let violation = lp.max_violation(&col_value);
        debug!("HiGHS interior point: status {}, violation {violation:e}", h.model_status());
        Ok((status != kHighsStatusError && violation <= self.primal_feasibility_tolerance).then_some(col_value))
    }

    /// Reads a model file (MPS or LP text, chosen by extension) with the
    /// HiGHS parser and converts it back into a [`LinearProgram`]. Column
    /// names are `c<j>` and the objective sense must be minimization.
    pub fn read_model(&self, path: &Path) -> Result<LinearProgram, LpError> {
        let mut h = Highs::new();
        self.configure(&mut h, true)?;
        let file = CString::new(path.to_string_lossy().as_bytes())
            .map_err(|_| LpError::Malformed("path contains NUL".into()))?;
        check(unsafe { Highs_readModel(h.0, file.as_ptr()) }, "readModel")?;
        let num_col = h.num_col();
        let num_row = h.num_row();
        let num_nz = unsafe { Highs_getNumNz(h.0) } as usize;
        let (mut nc, mut nr, mut nnz, mut sense) = (0 as HighsInt, 0 as HighsInt, 0 as HighsInt, 0 as HighsInt);
        let mut offset = 0.0;
        let mut cost = vec![0.0; num_col];
        let mut col_lower = vec![0.0; num_col];
        let mut col_upper = vec![0.0; num_col];
        let mut row_lower = vec![0.0; num_row];
        let mut row_upper = vec![0.0; num_row];
        let mut a_start = vec![0 as HighsInt; num_row + 1];
        let mut a_index = vec![0 as HighsInt; num_nz];
        let mut a_value = vec![0.0; num_nz];
        let mut integrality = vec![0 as HighsInt; num_col];
        check(
            unsafe {
                Highs_getLp(
                    h.0,
                    MATRIX_ROWWISE,
                    &mut nc,
                    &mut nr,
                    &mut nnz,
                    &mut sense,
                    &mut offset,
                    cost.as_mut_ptr(),
                    col_lower.as_mut_ptr(),
                    col_upper.as_mut_ptr(),
                    row_lower.as_mut_ptr(),
                    row_upper.as_mut_ptr(),
                    a_start.as_mut_ptr(),
                    a_index.as_mut_ptr(),
                    a_value.as_mut_ptr(),
                    integrality.as_mut_ptr(),
                )
            },
            "getLp",
        )?;
        if sense != SENSE_MINIMIZE {
            return Err(LpError::Malformed("model is not a minimization".into()));
        }
        a_start[num_row] = nnz;
        let mut lp = LinearProgram::new(path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        for j in 0..num_col {
            lp.add_variable(format!("c{j}"), col_lower[j], col_upper[j]);
        }
        lp.set_objective(
            SparseRow::from_pairs(cost.iter().copied().enumerate().filter(|&(_, c)| c != 0.0)),
            offset,
        );
        for i in 0..num_row {
            let range = a_start[i] as usize..a_start[i + 1] as usize;
            let row = SparseRow::from_pairs(
                a_index[range.clone()].iter().map(|&j| j as usize).zip(a_value[range].iter().copied()),
            );
            let (lo, hi) = (row_lower[i], row_upper[i]);
            if lo == hi {
                lp.add_constraint(row, Relation::Eq, lo);
            } else {
                if lo > f64::NEG_INFINITY {
                    lp.add_constraint(row.clone(), Relation::GreaterEq, lo);
                }
                if hi < f64::INFINITY {
                    lp.add_constraint(row, Relation::LessEq, hi);
                }
            }
        }
        Ok(lp)
    }
}

impl LpBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve_raw(&self, lp: &LinearProgram) -> Result<RawSolution, LpError> {
        let budget = self.interior_after.filter(|_| lp.objective().entries().is_empty());
        let mut h = Highs::new();
        self.configure(&mut h, self.presolve)?;
        if let Some(b) = budget {
            h.set_double("time_limit", self.time_limit.map_or(b, |t| t.min(b)))?;
        }
        self.pass(&mut h, lp)?;
        let mut out = self.run(&mut h)?;
        if budget.is_some() && h.model_status() == MODEL_STATUS_REACHED_TIME_LIMIT {
            if let Some(point) = self.interior_point(lp)? {
                let mut out = RawSolution::with_status(RawStatus::Optimal);
                out.objective = Some(lp.objective_constant());
                out.primal = Some(point);
                return Ok(out);
            }
            let mut h = Highs::new();
            self.configure(&mut h, self.presolve)?;
            self.pass(&mut h, lp)?;
            out = self.run(&mut h)?;
        }
        if out.status == RawStatus::InfeasibleOrUnbounded {
            let bounded = lp.lower().iter().chain(lp.upper()).all(|v| v.is_finite());
            if bounded {
                return Ok(RawSolution::with_status(RawStatus::Infeasible));
            }
        }
        if out.status == RawStatus::InfeasibleOrUnbounded && self.presolve {
            // Presolve cannot tell these apart; the plain solver can.
            let mut h = Highs::new();
            self.configure(&mut h, false)?;
            self.pass(&mut h, lp)?;
            return self.run(&mut h);
        }
        Ok(out)
    }
}
