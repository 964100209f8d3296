use std::collections::BTreeMap;

use super::HierarchyError;
use crate::moments::MomentIndex;
use crate::state_space::{PolytopePoint, StateSpace};

/// One monomial `coeff · Π_s letter_s` with at most one coordinate per space.
/// `None` marks the unit letter.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub letters: Vec<Option<u32>>,
}

impl Term {
    pub fn new(coeff: f64, letters: Vec<Option<u32>>) -> Self {
        Term { coeff, letters }
    }

    pub fn constant(coeff: f64, num_spaces: usize) -> Self {
        Term { coeff, letters: vec![None; num_spaces] }
    }

    /// The word of this term at `level`.
    pub fn word(&self, level: usize) -> MomentIndex {
        let per_space = self.letters.iter().map(|l| l.iter().copied().collect()).collect();
        MomentIndex::from_multisets(level, per_space).expect("terms have degree at most one per space")
    }

    pub fn evaluate(&self, points: &[PolytopePoint]) -> f64 {
        self.letters.iter().zip(points).fold(self.coeff, |acc, (l, p)| match l {
            Some(c) => acc * p.coordinates[*c as usize],
            None => acc,
        })
    }
}

/// Sparse multi-affine map from a product of state spaces to `R^q`.
///
/// Terms with the same letters are merged and zero coefficients dropped, so
/// every output holds its monomials in canonical (sorted) order.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    num_spaces: usize,
    shape: Option<(usize, usize)>,
    outputs: Vec<Vec<Term>>,
}

impl AffineMap {
    pub fn new(num_spaces: usize, outputs: Vec<Vec<Term>>) -> Result<Self, HierarchyError> {
        let mut canonical = Vec::with_capacity(outputs.len());
        for (r, terms) in outputs.into_iter().enumerate() {
            let mut merged: BTreeMap<Vec<Option<u32>>, f64> = BTreeMap::new();
            for t in terms {
                if t.letters.len() != num_spaces {
                    return Err(HierarchyError::InvalidMap(format!(
                        "output {r}: term has {} letters for {num_spaces} spaces",
                        t.letters.len()
                    )));
                }
                if !t.coeff.is_finite() {
                    return Err(HierarchyError::InvalidMap(format!("output {r}: non-finite coefficient")));
                }
                *merged.entry(t.letters).or_insert(0.0) += t.coeff;
            }
            canonical.push(
                merged
                    .into_iter()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(letters, coeff)| Term { coeff, letters })
                    .collect(),
            );
        }
        Ok(AffineMap { num_spaces, shape: None, outputs: canonical })
    }

    /// The map with `output_dim` outputs that are identically zero.
    pub fn zero(num_spaces: usize, output_dim: usize) -> Self {
        AffineMap { num_spaces, shape: None, outputs: vec![Vec::new(); output_dim] }
    }

    /// Declares the outputs to be a row-major `rows × cols` matrix.
    pub fn with_shape(mut self, rows: usize, cols: usize) -> Result<Self, HierarchyError> {
        if rows * cols != self.outputs.len() {
            return Err(HierarchyError::ShapeMismatch { rows, cols, outputs: self.outputs.len() });
        }
        self.shape = Some((rows, cols));
        Ok(self)
    }

    pub fn num_spaces(&self) -> usize {
        self.num_spaces
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn output_shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    pub fn outputs(&self) -> &[Vec<Term>] {
        &self.outputs
    }

    pub fn terms(&self, r: usize) -> &[Term] {
        &self.outputs[r]
    }

    /// Number of slots output `r` occupies in space `s`.
    pub fn needs(&self, r: usize, s: usize) -> usize {
        usize::from(self.outputs[r].iter().any(|t| t.letters[s].is_some()))
    }

    /// Checks that every letter refers to a coordinate of `spaces`.
    pub fn check_against(&self, spaces: &[StateSpace]) -> Result<(), HierarchyError> {
        if spaces.len() != self.num_spaces {
            return Err(HierarchyError::DimensionMismatch { expected: spaces.len(), got: self.num_spaces });
        }
        for (r, terms) in self.outputs.iter().enumerate() {
            for t in terms {
                for (s, l) in t.letters.iter().enumerate() {
                    if let Some(c) = l {
                        if *c as usize >= spaces[s].free_dim() {
                            return Err(HierarchyError::InvalidMap(format!(
                                "output {r}: coordinate {c} out of range for space {}",
                                spaces[s].name()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, points: &[PolytopePoint]) -> Vec<f64> {
        self.outputs
            .iter()
            .map(|terms| terms.iter().map(|t| t.evaluate(points)).sum())
            .collect()
    }
}

/// Feasibility or optimization problem `min p(x) s.t. f(x) = 0, x_s ∈ K_s`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spaces: Vec<StateSpace>,
    pub constraint_map: AffineMap,
    pub objective: AffineMap,
}

impl Problem {
    pub fn new(spaces: Vec<StateSpace>, constraint_map: AffineMap) -> Result<Self, HierarchyError> {
        let objective = AffineMap::zero(spaces.len(), 1);
        Self::with_objective(spaces, constraint_map, objective)
    }

    pub fn with_objective(
        spaces: Vec<StateSpace>,
        constraint_map: AffineMap,
        objective: AffineMap,
    ) -> Result<Self, HierarchyError> {
        constraint_map.check_against(&spaces)?;
        objective.check_against(&spaces)?;
        if objective.output_dim() != 1 {
            return Err(HierarchyError::InvalidMap(format!(
                "objective must have one output, got {}",
                objective.output_dim()
            )));
        }
        Ok(Problem { spaces, constraint_map, objective })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(StateSpace::free_dim).collect()
    }
}
