use std::collections::HashSet;
use std::fmt;

use super::LpError;

/// Relation of a constraint row to its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    LessEq,
    Eq,
    GreaterEq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::LessEq => "<=",
            Relation::Eq => "=",
            Relation::GreaterEq => ">=",
        })
    }
}

/// A sparse row `Σ coeff · x[col]`. Column indices are unique and sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Builds a row from arbitrary `(column, coefficient)` pairs, summing
    /// duplicates and dropping exact zeros.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(col, _)| col);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (col, value) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == col => last.1 += value,
                _ => merged.push((col, value)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        SparseRow { entries: merged }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * x[c]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub row: SparseRow,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Signed violation of the row at `x` (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.row.dot(x);
        match self.relation {
            Relation::LessEq => (lhs - self.rhs).max(0.0),
            Relation::GreaterEq => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization LP over named, bounded columns.
///
/// Rows and columns keep insertion order, so two programs built from the
/// same inputs are identical and export to identical bytes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub name: String,
    variable_names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    constraints: Vec<Constraint>,
    objective: SparseRow,
    objective_constant: f64,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        LinearProgram {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Adds a column and returns its index.
    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.variable_names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.variable_names.len() - 1
    }

    pub fn add_constraint(&mut self, row: SparseRow, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { row, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, row: SparseRow, constant: f64) {
        self.objective = row;
        self.objective_constant = constant;
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.lower[col] = lower;
        self.upper[col] = upper;
    }

    pub fn num_variables(&self) -> usize {
        self.variable_names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.row.entries().len()).sum()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &SparseRow {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.dot(x) + self.objective_constant
    }

    /// Checks that row entries reference declared columns, names are unique
    /// and bounds are ordered.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_variables();
        let mut seen = HashSet::with_capacity(n);
        for name in &self.variable_names {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(LpError::Malformed(format!("invalid column name {name:?}")));
            }
            if !seen.insert(name.as_str()) {
                return Err(LpError::Malformed(format!("duplicate column name {name}")));
            }
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!(
                    "column {} has bounds [{lo}, {hi}]",
                    self.variable_names[j]
                )));
            }
        }
        let rows = self
            .constraints
            .iter()
            .map(|c| (&c.row, c.rhs))
            .chain(std::iter::once((&self.objective, self.objective_constant)));
        for (i, (row, rhs)) in rows.enumerate() {
            if !rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has non-finite rhs")));
            }
            for &(col, value) in row.entries() {
                if col >= n || !value.is_finite() {
                    return Err(LpError::Malformed(format!(
                        "row {i} has entry ({col}, {value})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Index of the named column, by linear scan.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|n| n == name)
    }
}
