//! Compact polyhedral state spaces in H-representation.
//!
//! A state space is a polytope `{x ∈ ℝ^d : g(x) ≥ 0 for every facet g}` over
//! `d` free coordinates. Each coordinate is a letter of the space's alphabet;
//! the implicit unit letter evaluates to 1 everywhere.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpStatus, Relation, Solver, SparseRow};

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Recession-cone probes above this are treated as unbounded directions.
const RECESSION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StateSpaceError {
    #[error("coordinate {0} is unbounded over the facet system")]
    UnboundedSpace(String),
    #[error("facet system is infeasible")]
    EmptySpace,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid shape {rows}x{cols}")]
    InvalidShape { rows: usize, cols: usize },
    #[error("facet {0} is identically zero")]
    ZeroFacet(usize),
    #[error("invalid letter name {0:?}")]
    InvalidLetterName(String),
    #[error("validation solve failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Affine function `constant + Σ coefficients[i]·x_i`, nonnegative on the
/// space it bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetFunctional {
    pub constant: f64,
    pub coefficients: BTreeMap<usize, f64>,
}

impl FacetFunctional {
    pub fn new<I: IntoIterator<Item = (usize, f64)>>(constant: f64, coefficients: I) -> Self {
        let mut map = BTreeMap::new();
        for (i, c) in coefficients {
            *map.entry(i).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        FacetFunctional { constant, coefficients: map }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.constant + self.coefficients.iter().map(|(&i, &c)| c * x[i]).sum::<f64>()
    }

    /// The facet is `c·x_i ≥ 0` for a single coordinate with `c > 0`.
    pub fn as_coordinate_nonnegativity(&self) -> Option<usize> {
        if self.constant != 0.0 || self.coefficients.len() != 1 {
            return None;
        }
        let (&i, &c) = self.coefficients.iter().next()?;
        (c > 0.0).then_some(i)
    }

    fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.coefficients.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopePoint {
    pub coordinates: Vec<f64>,
}

impl PolytopePoint {
    pub fn new(coordinates: Vec<f64>) -> Self {
        PolytopePoint { coordinates }
    }
}

/// A validated, bounded, nonempty polytope. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    name: String,
    free_dim: usize,
    facets: Vec<FacetFunctional>,
    letter_names: Vec<String>,
    ranges: Vec<(f64, f64)>,
    probe: PolytopePoint,
    tolerance: f64,
}

fn valid_letter_name(name: &str) -> bool {
    !name.is_empty()
        && name != "unit"
        && name
            .chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '[' | ']' | '+' | ';' | '"'))
}

/// Snaps values within `tol` of an integer onto it.
fn snap(v: f64, tol: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= tol {
        r
    } else {
        v
    }
}

impl StateSpace {
    /// Validates a facet system and builds the space.
    ///
    /// Boundedness is established by checking that the recession cone
    /// `{d : Σ coeff·d ≥ 0}` is trivial, one max and one min probe per
    /// coordinate over `d ∈ [-1, 1]^n`. Nonemptiness comes from a
    /// feasibility solve, whose point is kept as the probe point. Coordinate
    /// ranges are then computed exactly by LP.
    pub fn polytope(
        name: impl Into<String>,
        free_dim: usize,
        facets: Vec<FacetFunctional>,
        letter_names: Vec<String>,
    ) -> Result<Self, StateSpaceError> {
        Self::polytope_with(name, free_dim, facets, letter_names, &Solver::default())
    }

    pub fn polytope_with(
        name: impl Into<String>,
        free_dim: usize,
        facets: Vec<FacetFunctional>,
        letter_names: Vec<String>,
        solver: &Solver,
    ) -> Result<Self, StateSpaceError> {
        let name = name.into();
        if letter_names.len() != free_dim {
            return Err(StateSpaceError::DimensionMismatch {
                expected: free_dim,
                got: letter_names.len(),
            });
        }
        let mut seen = HashSet::new();
        for l in &letter_names {
            if !valid_letter_name(l) || !seen.insert(l.as_str()) {
                return Err(StateSpaceError::InvalidLetterName(l.clone()));
            }
        }
        for (k, f) in facets.iter().enumerate() {
            if f.is_zero() {
                return Err(StateSpaceError::ZeroFacet(k));
            }
            if let Some((&i, _)) = f.coefficients.iter().next_back() {
                if i >= free_dim {
                    return Err(StateSpaceError::DimensionMismatch { expected: free_dim, got: i + 1 });
                }
            }
        }

        let facet_program = |lower: f64, upper: f64, homogeneous: bool| {
            let mut lp = LinearProgram::new(format!("{name}_probe"));
            for l in &letter_names {
                lp.add_variable(l.clone(), lower, upper);
            }
            for f in &facets {
                let row = SparseRow::from_pairs(f.coefficients.iter().map(|(&i, &c)| (i, c)));
                let rhs = if homogeneous { 0.0 } else { -f.constant };
                if row.is_empty() {
                    continue;
                }
                lp.add_constraint(row, Relation::GreaterEq, rhs);
            }
            lp
        };

        if facets.iter().any(|f| f.coefficients.is_empty() && f.constant < 0.0) {
            return Err(StateSpaceError::EmptySpace);
        }

        // Recession cone.
        let cone = facet_program(-1.0, 1.0, true);
        for i in 0..free_dim {
            for sign in [1.0, -1.0] {
                let mut lp = cone.clone();
                lp.set_objective(SparseRow::from_pairs([(i, -sign)]), 0.0);
                let best = optimum(solver, &lp)?;
                if -best > RECESSION_TOL {
                    return Err(StateSpaceError::UnboundedSpace(letter_names[i].clone()));
                }
            }
        }

        // Nonemptiness.
        let system = facet_program(f64::NEG_INFINITY, f64::INFINITY, false);
        let out = solver.solve(&system)?;
        let probe = match out.status {
            LpStatus::Feasible => PolytopePoint::new(out.point.unwrap_or_default()),
            LpStatus::Infeasible => return Err(StateSpaceError::EmptySpace),
            LpStatus::Unknown => {
                return Err(StateSpaceError::Solver(out.diagnostic.unwrap_or_default()))
            }
        };

        let mut ranges = Vec::with_capacity(free_dim);
        for i in 0..free_dim {
            let mut lp = system.clone();
            lp.set_objective(SparseRow::from_pairs([(i, 1.0)]), 0.0);
            let lo = optimum(solver, &lp)?;
            lp.set_objective(SparseRow::from_pairs([(i, -1.0)]), 0.0);
            let hi = -optimum(solver, &lp)?;
            ranges.push((snap(lo, DEFAULT_MEMBERSHIP_TOL), snap(hi, DEFAULT_MEMBERSHIP_TOL)));
        }

        let space = StateSpace {
            name,
            free_dim,
            facets,
            letter_names,
            ranges,
            probe,
            tolerance: DEFAULT_MEMBERSHIP_TOL,
        };
        if !space.contains(&space.probe) {
            return Err(StateSpaceError::Solver("probe point violates the facets".into()));
        }
        Ok(space)
    }

    /// Column-stochastic `rows × cols` matrices with the last row eliminated.
    ///
    /// Free coordinates are `X_ij` for `i < rows − 1`, ordered row-major and
    /// named `<prefix><i><j>` (1-based; `<prefix><i>_<j>` when an index
    /// exceeds 9). Facets are `X_ij ≥ 0` for every free entry, then
    /// `1 − Σ_i X_ij ≥ 0` for each column.
    pub fn left_stochastic(prefix: &str, rows: usize, cols: usize) -> Result<Self, StateSpaceError> {
        if rows < 1 || cols < 1 {
            return Err(StateSpaceError::InvalidShape { rows, cols });
        }
        let free_rows = rows - 1;
        let wide = rows > 9 || cols > 9;
        let mut letter_names = Vec::with_capacity(free_rows * cols);
        for i in 1..=free_rows {
            for j in 1..=cols {
                letter_names.push(if wide {
                    format!("{prefix}{i}_{j}")
                } else {
                    format!("{prefix}{i}{j}")
                });
            }
        }
        let mut facets = Vec::with_capacity(rows * cols);
        for k in 0..free_rows * cols {
            facets.push(FacetFunctional::new(0.0, [(k, 1.0)]));
        }
        for j in 0..cols {
            facets.push(FacetFunctional::new(1.0, (0..free_rows).map(|i| (i * cols + j, -1.0))));
        }
        Self::polytope(prefix, free_rows * cols, facets, letter_names)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn free_dim(&self) -> usize {
        self.free_dim
    }

    /// Free coordinates plus the unit letter.
    pub fn alphabet_size(&self) -> usize {
        self.free_dim + 1
    }

    pub fn facets(&self) -> &[FacetFunctional] {
        &self.facets
    }

    pub fn letter_names(&self) -> &[String] {
        &self.letter_names
    }

    pub fn letter_index(&self, name: &str) -> Option<usize> {
        self.letter_names.iter().position(|l| l == name)
    }

    /// Exact `[min, max]` of each coordinate over the polytope.
    pub fn coordinate_ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    /// The coordinate is nonnegative on the whole space.
    pub fn is_nonnegative(&self, coordinate: usize) -> bool {
        self.ranges[coordinate].0 >= 0.0
    }

    pub fn probe_point(&self) -> &PolytopePoint {
        &self.probe
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    /// Values of every facet at `point`, in declaration order.
    pub fn evaluate_facets(&self, point: &PolytopePoint) -> Result<Vec<f64>, StateSpaceError> {
        if point.coordinates.len() != self.free_dim {
            return Err(StateSpaceError::DimensionMismatch {
                expected: self.free_dim,
                got: point.coordinates.len(),
            });
        }
        Ok(self.facets.iter().map(|f| f.evaluate(&point.coordinates)).collect())
    }

    pub fn contains(&self, point: &PolytopePoint) -> bool {
        self.evaluate_facets(point)
            .map(|v| v.iter().all(|&g| g >= -self.tolerance))
            .unwrap_or(false)
    }
}

fn optimum(solver: &Solver, lp: &LinearProgram) -> Result<f64, StateSpaceError> {
    let out = solver.solve(lp)?;
    match (out.status, out.objective_value) {
        (LpStatus::Feasible, Some(v)) => Ok(v),
        (LpStatus::Infeasible, _) => Err(StateSpaceError::EmptySpace),
        _ => Err(StateSpaceError::Solver(out.diagnostic.unwrap_or_else(|| "no optimum".into()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn segment() -> StateSpace {
        StateSpace::polytope(
            "seg",
            1,
            vec![FacetFunctional::new(0.0, [(0, 1.0)]), FacetFunctional::new(1.0, [(0, -1.0)])],
            names(&["x"]),
        )
        .unwrap()
    }

    #[test]
    fn unit_segment() {
        let seg = segment();
        assert_eq!(seg.alphabet_size(), 2);
        assert_eq!(seg.coordinate_ranges(), &[(0.0, 1.0)]);
        assert_eq!(seg.evaluate_facets(&PolytopePoint::new(vec![0.5])).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn half_line_is_unbounded() {
        let err = StateSpace::polytope("h", 1, vec![FacetFunctional::new(0.0, [(0, 1.0)])], names(&["x"]))
            .unwrap_err();
        assert!(matches!(err, StateSpaceError::UnboundedSpace(ref l) if l == "x"));
    }

    #[test]
    fn contradictory_facets_are_empty() {
        let err = StateSpace::polytope(
            "e",
            1,
            vec![FacetFunctional::new(-2.0, [(0, 1.0)]), FacetFunctional::new(1.0, [(0, -1.0)])],
            names(&["x"]),
        )
        .unwrap_err();
        assert!(matches!(err, StateSpaceError::EmptySpace), "{err:?}");
    }

    #[test]
    fn letter_names_must_match_dimension() {
        let err = StateSpace::polytope("d", 2, vec![], names(&["x"])).unwrap_err();
        assert!(matches!(err, StateSpaceError::DimensionMismatch { expected: 2, got: 1 }));
        let err = StateSpace::polytope(
            "d",
            2,
            vec![],
            names(&["x", "x"]),
        )
        .unwrap_err();
        assert!(matches!(err, StateSpaceError::InvalidLetterName(_)));
    }

    #[test]
    fn stochastic_dimensions() {
        let u = StateSpace::left_stochastic("U", 4, 3).unwrap();
        assert_eq!((u.free_dim(), u.alphabet_size(), u.facets().len()), (9, 10, 12));
        let v = StateSpace::left_stochastic("V", 3, 4).unwrap();
        assert_eq!((v.free_dim(), v.alphabet_size(), v.facets().len()), (8, 9, 12));
        assert_eq!(u.letter_names()[..4], names(&["U11", "U12", "U13", "U21"])[..]);
        assert!(u.coordinate_ranges().iter().all(|&r| r == (0.0, 1.0)));
    }

    #[test]
    fn single_row_stochastic_is_a_point() {
        let s = StateSpace::left_stochastic("R", 1, 2).unwrap();
        assert_eq!(s.free_dim(), 0);
        assert_eq!(s.facets().len(), 2);
        assert!(s.facets().iter().all(|f| f.constant == 1.0 && f.coefficients.is_empty()));
    }

    #[test]
    fn invalid_shape() {
        assert!(matches!(
            StateSpace::left_stochastic("U", 0, 3),
            Err(StateSpaceError::InvalidShape { rows: 0, cols: 3 })
        ));
    }

    #[test]
    fn stochastic_facet_values() {
        let u = StateSpace::left_stochastic("U", 4, 3).unwrap();
        let vals = u.evaluate_facets(&PolytopePoint::new(vec![0.25; 9])).unwrap();
        assert_eq!(vals.len(), 12);
        assert!(vals.iter().all(|&v| (v - 0.25).abs() < 1e-15));

        let mut x = vec![0.0; 9];
        x[0] = 2.0;
        let vals = u.evaluate_facets(&PolytopePoint::new(x)).unwrap();
        assert!(vals.contains(&-1.0));
        assert!(u.evaluate_facets(&PolytopePoint::new(vec![0.0; 3])).is_err());
    }

    #[test]
    fn probe_point_is_inside() {
        for (r, c) in [(4, 3), (3, 4), (2, 2), (1, 3)] {
            let s = StateSpace::left_stochastic("X", r, c).unwrap();
            assert!(s.evaluate_facets(s.probe_point()).unwrap().iter().all(|&g| g >= -1e-9));
        }
    }
}
