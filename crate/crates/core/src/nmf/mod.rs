//! Nonnegative-rank lower bounds through the hierarchy.
//!
//! A nonnegative `n × m` matrix `A` with no zero rows or columns has
//! nonnegative rank at most `k` iff its column-normalized form `Ã` factors
//! as `Ã = U V` with `U` an `n × k` and `V` a `k × m` left-stochastic matrix.
//! Infeasibility of any level of the hierarchy for that problem proves the
//! rank exceeds `k`.

mod scan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{AffineMap, HierarchyError, Problem, Term};
use crate::lp::LpError;
use crate::state_space::{StateSpace, StateSpaceError};

pub use scan::{check_point, scan_region, write_region_csv, RegionRecord, ScanConfig};

#[derive(Debug, Error)]
pub enum NmfError {
    #[error("matrix has {got} entries, expected {rows}x{cols}")]
    Shape { rows: usize, cols: usize, got: usize },
    #[error("entry ({row}, {col}) is negative or not finite")]
    NegativeEntry { row: usize, col: usize },
    #[error("column {0} is identically zero")]
    ZeroColumn(usize),
    #[error("row {0} is identically zero")]
    ZeroRow(usize),
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("({a}, {b}) lies outside [0, 1]^2")]
    DomainError { a: f64, b: f64 },
    #[error("grid needs at least 2 points and a positive bisection tolerance")]
    InvalidScan,
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense row-major matrix with nonnegative entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl NonnegMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, NmfError> {
        if entries.len() != rows * cols {
            return Err(NmfError::Shape { rows, cols, got: entries.len() });
        }
        if let Some(k) = entries.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(NmfError::NegativeEntry { row: k / cols, col: k % cols });
        }
        Ok(NonnegMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NmfError> {
        let cols = rows.first().map_or(0, Vec::len);
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Re-checks the invariants, e.g. after deserializing.
    pub fn validated(self) -> Result<Self, NmfError> {
        Self::new(self.rows, self.cols, self.entries)
    }
}

/// Scales columns to sum to one. Returns the scaled matrix and the factors.
pub fn normalize_to_stochastic(a: &NonnegMatrix) -> Result<(NonnegMatrix, Vec<f64>), NmfError> {
    for i in 0..a.rows {
        if (0..a.cols).all(|j| a.get(i, j) == 0.0) {
            return Err(NmfError::ZeroRow(i));
        }
    }
    let sums = a.column_sums();
    if let Some(j) = sums.iter().position(|s| *s == 0.0) {
        return Err(NmfError::ZeroColumn(j));
    }
    let d: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
    let entries = a.entries.iter().enumerate().map(|(k, v)| v * d[k % a.cols]).collect();
    Ok((NonnegMatrix { rows: a.rows, cols: a.cols, entries }, d))
}

/// Entry `(i, j)` of a `rows × cols` left-stochastic matrix as an affine
/// function of its free coordinates; the last row is `1 − Σ` of the others.
fn stochastic_entry(rows: usize, cols: usize, i: usize, j: usize) -> Vec<(f64, Option<u32>)> {
    if i + 1 < rows {
        vec![(1.0, Some((i * cols + j) as u32))]
    } else {
        let mut out = vec![(1.0, None)];
        out.extend((0..rows - 1).map(|r| (-1.0, Some((r * cols + j) as u32))));
        out
    }
}

/// The problem `U V − Ã = 0` over `n × k` and `k × m` left-stochastic
/// matrices, with outputs shaped as an `n × m` matrix.
pub fn nmf_problem(a: &NonnegMatrix, k: usize) -> Result<Problem, NmfError> {
    if k == 0 {
        return Err(NmfError::ZeroRank);
    }
    let (at, _) = normalize_to_stochastic(a)?;
    let (n, m) = (at.rows, at.cols);
    let u = StateSpace::left_stochastic("U", n, k)?;
    let v = StateSpace::left_stochastic("V", k, m)?;
    let mut outputs = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let mut terms = vec![Term::constant(-at.get(i, j), 2)];
            for l in 0..k {
                for &(cu, lu) in &stochastic_entry(n, k, i, l) {
                    for &(cv, lv) in &stochastic_entry(k, m, l, j) {
                        terms.push(Term::new(cu * cv, vec![lu, lv]));
                    }
                }
            }
            outputs.push(terms);
        }
    }
    let f = AffineMap::new(2, outputs)?.with_shape(n, m)?;
    Ok(Problem::new(vec![u, v], f)?)
}

/// `M(a, b)`, a 4×4 left-stochastic matrix of nonnegative rank 3 exactly
/// when `(1 + a)(1 + b) ≤ 2`.
pub fn nested_rectangles_matrix(a: f64, b: f64) -> Result<NonnegMatrix, NmfError> {
    if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
        return Err(NmfError::DomainError { a, b });
    }
    let rows = [
        [1.0 - a, 1.0 + a, 1.0 - b, 1.0 + b],
        [1.0 + a, 1.0 - a, 1.0 - b, 1.0 + b],
        [1.0 + a, 1.0 - a, 1.0 + b, 1.0 - b],
        [1.0 - a, 1.0 + a, 1.0 + b, 1.0 - b],
    ];
    let entries = rows.iter().flatten().map(|v| v / 4.0).collect();
    NonnegMatrix::new(4, 4, entries)
}

pub fn nested_rectangles_problem(a: f64, b: f64) -> Result<Problem, NmfError> {
    nmf_problem(&nested_rectangles_matrix(a, b)?, 3)
}

pub fn analytic_feasible(a: f64, b: f64) -> bool {
    (1.0 + a) * (1.0 + b) <= 2.0
}
