//! Farkas certificates of LP infeasibility.
//!
//! A ray assigns a multiplier to every constraint row and to both sides of
//! every column bound. Row multipliers are `≥ 0` on `≥` rows, `≤ 0` on `≤`
//! rows and free on equalities, so `y_i (a_i·x − b_i) ≥ 0` for every
//! feasible `x`. Lower-bound multipliers `μ_j ≥ 0` contribute
//! `μ_j (x_j − lo_j) ≥ 0` and upper-bound multipliers `ν_j ≥ 0` contribute
//! `ν_j (hi_j − x_j) ≥ 0`. Summing gives `r·x ≥ s` with
//!
//! ```text
//! r = Σ y_i a_i + μ − ν,    s = Σ y_i b_i + μ·lo − ν·hi
//! ```
//!
//! and the ray witnesses infeasibility when `r = 0` and `s > 0`.

use super::model::{LinearProgram, Relation};
use super::LpError;

#[derive(Debug, Clone, PartialEq)]
pub struct FarkasRay {
    pub rows: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Aggregated inequality `r·x ≥ s` implied by a ray.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

impl FarkasRay {
    pub fn zeros(lp: &LinearProgram) -> Self {
        FarkasRay {
            rows: vec![0.0; lp.num_constraints()],
            lower: vec![0.0; lp.num_variables()],
            upper: vec![0.0; lp.num_variables()],
        }
    }

    fn scale(&self) -> f64 {
        self.rows
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn check_dims(&self, lp: &LinearProgram) -> Result<(), LpError> {
        if self.rows.len() != lp.num_constraints()
            || self.lower.len() != lp.num_variables()
            || self.upper.len() != lp.num_variables()
        {
            return Err(LpError::DimensionMismatch {
                expected: lp.num_constraints() + 2 * lp.num_variables(),
                got: self.rows.len() + self.lower.len() + self.upper.len(),
            });
        }
        Ok(())
    }

    pub fn aggregate(&self, lp: &LinearProgram) -> Result<Aggregate, LpError> {
        self.check_dims(lp)?;
        let mut coefficients = vec![0.0; lp.num_variables()];
        let mut rhs = 0.0;
        for (c, &y) in lp.constraints().iter().zip(&self.rows) {
            if y == 0.0 {
                continue;
            }
            for &(col, a) in c.row.entries() {
                coefficients[col] += y * a;
            }
            rhs += y * c.rhs;
        }
        for j in 0..lp.num_variables() {
            let (mu, nu) = (self.lower[j], self.upper[j]);
            coefficients[j] += mu - nu;
            if mu != 0.0 {
                rhs += mu * lp.lower()[j];
            }
            if nu != 0.0 {
                rhs -= nu * lp.upper()[j];
            }
        }
        Ok(Aggregate { coefficients, rhs })
    }
}

fn sign_ok(relation: Relation, y: f64) -> bool {
    match relation {
        Relation::GreaterEq => y >= 0.0,
        Relation::LessEq => y <= 0.0,
        Relation::Eq => true,
    }
}

/// Checks that `ray` proves `lp` infeasible.
///
/// The ray is normalized to unit max-norm. Every aggregated coefficient must
/// then be within `tol` of zero, and the aggregated right-hand side must
/// exceed `tol` after subtracting the worst case `Σ |r_j| · max(|lo_j|, |hi_j|)`
/// of the leftover coefficients over the column box.
pub fn verify_certificate(lp: &LinearProgram, ray: &FarkasRay, tol: f64) -> Result<bool, LpError> {
    ray.check_dims(lp)?;
    let scale = ray.scale();
    if scale == 0.0 || !scale.is_finite() {
        return Ok(false);
    }
    let signs = lp
        .constraints()
        .iter()
        .zip(&ray.rows)
        .all(|(c, &y)| sign_ok(c.relation, y))
        && ray.lower.iter().all(|&m| m >= 0.0)
        && ray.upper.iter().all(|&m| m >= 0.0);
    if !signs {
        return Ok(false);
    }
    for j in 0..lp.num_variables() {
        if (ray.lower[j] > 0.0 && !lp.lower()[j].is_finite())
            || (ray.upper[j] > 0.0 && !lp.upper()[j].is_finite())
        {
            return Ok(false);
        }
    }
    let agg = ray.aggregate(lp)?;
    let mut slack = 0.0;
    for (j, &r) in agg.coefficients.iter().enumerate() {
        let r = r / scale;
        if r.abs() > tol {
            return Ok(false);
        }
        let reach = lp.lower()[j].abs().max(lp.upper()[j].abs());
        // Infinite boxes contribute nothing beyond the tolerance check above.
        if reach.is_finite() {
            slack += r.abs() * reach;
        }
    }
    Ok(agg.rhs / scale - slack > tol)
}

/// Completes row multipliers into a full ray by choosing the bound
/// multipliers that cancel the aggregated row exactly.
///
/// Multipliers with the wrong sign for their row are clipped to zero.
/// Columns without a finite bound on the side needed to cancel their
/// aggregate are left uncancelled, for [`verify_certificate`] to judge.
pub fn complete_from_rows(lp: &LinearProgram, row_multipliers: &[f64]) -> Option<FarkasRay> {
    if row_multipliers.len() != lp.num_constraints() {
        return None;
    }
    let rows: Vec<f64> = lp
        .constraints()
        .iter()
        .zip(row_multipliers)
        .map(|(c, &y)| if sign_ok(c.relation, y) && y.is_finite() { y } else { 0.0 })
        .collect();
    let mut partial = vec![0.0; lp.num_variables()];
    for (c, &y) in lp.constraints().iter().zip(&rows) {
        if y != 0.0 {
            for &(col, a) in c.row.entries() {
                partial[col] += y * a;
            }
        }
    }
    let mut ray = FarkasRay {
        rows,
        lower: vec![0.0; lp.num_variables()],
        upper: vec![0.0; lp.num_variables()],
    };
    for (j, &r) in partial.iter().enumerate() {
        if r < 0.0 && lp.lower()[j].is_finite() {
            ray.lower[j] = -r;
        } else if r > 0.0 && lp.upper()[j].is_finite() {
            ray.upper[j] = r;
        }
    }
    Some(ray)
}

/// Tries `row_multipliers` and its negation, returning the first completion
/// that verifies.
pub fn certificate_from_rows(
    lp: &LinearProgram,
    row_multipliers: &[f64],
    tol: f64,
) -> Option<FarkasRay> {
    for sign in [1.0, -1.0] {
        let flipped: Vec<f64> = row_multipliers.iter().map(|v| sign * v).collect();
        if let Some(ray) = complete_from_rows(lp, &flipped) {
            if verify_certificate(lp, &ray, tol).unwrap_or(false) {
                return Some(ray);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::model::SparseRow;

    fn x_equals_two() -> LinearProgram {
        let mut lp = LinearProgram::new("x2");
        lp.add_variable("x", 0.0, 1.0);
        lp.add_constraint(SparseRow::from_pairs([(0, 1.0)]), Relation::Eq, 2.0);
        lp
    }

    #[test]
    fn textbook_ray_verifies() {
        let lp = x_equals_two();
        let ray = FarkasRay {
            rows: vec![1.0],
            lower: vec![0.0],
            upper: vec![1.0],
        };
        let agg = ray.aggregate(&lp).unwrap();
        assert_eq!(agg.coefficients, vec![0.0]);
        assert_eq!(agg.rhs, 1.0);
        assert!(verify_certificate(&lp, &ray, 1e-7).unwrap());
    }

    #[test]
    fn zero_ray_rejected() {
        let lp = x_equals_two();
        assert!(!verify_certificate(&lp, &FarkasRay::zeros(&lp), 1e-7).unwrap());
    }

    #[test]
    fn wrong_sign_rejected() {
        let mut lp = LinearProgram::new("t");
        lp.add_variable("x", 0.0, 1.0);
        lp.add_constraint(SparseRow::from_pairs([(0, 1.0)]), Relation::GreaterEq, 2.0);
        let bad = FarkasRay { rows: vec![-1.0], lower: vec![1.0], upper: vec![0.0] };
        assert!(!verify_certificate(&lp, &bad, 1e-7).unwrap());
        let good = FarkasRay { rows: vec![1.0], lower: vec![0.0], upper: vec![1.0] };
        assert!(verify_certificate(&lp, &good, 1e-7).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let lp = x_equals_two();
        let ray = FarkasRay { rows: vec![], lower: vec![0.0], upper: vec![0.0] };
        assert!(matches!(
            verify_certificate(&lp, &ray, 1e-7),
            Err(LpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn completion_finds_both_signs() {
        let lp = x_equals_two();
        assert!(certificate_from_rows(&lp, &[1.0], 1e-7).is_some());
        assert!(certificate_from_rows(&lp, &[-3.0], 1e-7).is_some());
    }

    #[test]
    fn feasible_lp_has_no_completion() {
        let mut lp = LinearProgram::new("t");
        lp.add_variable("x", 0.0, 1.0);
        lp.add_constraint(SparseRow::from_pairs([(0, 1.0)]), Relation::Eq, 0.5);
        assert!(certificate_from_rows(&lp, &[1.0], 1e-7).is_none());
    }
}
