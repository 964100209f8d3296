use std::collections::BTreeMap;

use super::affine::Problem;
use super::HierarchyError;
use crate::moments::{enumerate_indices, MomentIndex};
use crate::state_space::PolytopePoint;

/// Values of moment variables, keyed by index.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAssignment {
    level: usize,
    values: BTreeMap<MomentIndex, f64>,
}

impl MomentAssignment {
    pub fn new(level: usize, values: Vec<(MomentIndex, f64)>) -> Self {
        MomentAssignment { level, values: values.into_iter().collect() }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: &MomentIndex) -> Option<f64> {
        self.values.get(idx).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MomentIndex, &f64)> {
        self.values.iter()
    }

    /// Keeps the indices that fit at `level`, relabelled at that level.
    pub fn restrict(&self, level: usize) -> MomentAssignment {
        let values = self
            .values
            .iter()
            .filter_map(|(idx, v)| idx.at_level(level).ok().map(|i| (i, *v)))
            .collect();
        MomentAssignment { level, values }
    }
}

/// The product assignment `y[w] = Π x_s[c]` over every level-`n` word.
pub fn lift_product_point(
    problem: &Problem,
    points: &[PolytopePoint],
    level: usize,
) -> Result<MomentAssignment, HierarchyError> {
    if points.len() != problem.spaces.len() {
        return Err(HierarchyError::DimensionMismatch { expected: problem.spaces.len(), got: points.len() });
    }
    for (space, p) in problem.spaces.iter().zip(points) {
        if p.coordinates.len() != space.free_dim() {
            return Err(HierarchyError::DimensionMismatch { expected: space.free_dim(), got: p.coordinates.len() });
        }
        if !space.contains(p) {
            return Err(HierarchyError::PointOutside(space.name().to_string()));
        }
    }
    let values = enumerate_indices(level, &problem.dims())
        .into_iter()
        .map(|idx| {
            let v = idx
                .per_space()
                .iter()
                .zip(points)
                .fold(1.0, |acc, (m, p)| m.iter().fold(acc, |a, &c| a * p.coordinates[c as usize]));
            (idx, v)
        })
        .collect();
    Ok(MomentAssignment { level, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::AffineMap;
    use crate::state_space::{FacetFunctional, StateSpace};

    fn seg_problem() -> Problem {
        let seg = StateSpace::polytope(
            "seg",
            1,
            vec![FacetFunctional::new(0.0, [(0, 1.0)]), FacetFunctional::new(1.0, [(0, -1.0)])],
            vec!["x".into()],
        )
        .unwrap();
        Problem::new(vec![seg], AffineMap::zero(1, 0)).unwrap()
    }

    #[test]
    fn squares_on_segment() {
        let y = lift_product_point(&seg_problem(), &[PolytopePoint::new(vec![0.5])], 2).unwrap();
        assert_eq!(y.get(&MomentIndex::from_multisets(2, vec![vec![0]]).unwrap()), Some(0.5));
        assert_eq!(y.get(&MomentIndex::from_multisets(2, vec![vec![0, 0]]).unwrap()), Some(0.25));
        assert_eq!(y.get(&MomentIndex::empty(2, 1)), Some(1.0));
    }

    #[test]
    fn level_zero_is_normalization() {
        let y = lift_product_point(&seg_problem(), &[PolytopePoint::new(vec![0.3])], 0).unwrap();
        assert_eq!(y.len(), 1);
        assert_eq!(y.get(&MomentIndex::empty(0, 1)), Some(1.0));
    }

    #[test]
    fn rejects_bad_points() {
        let p = seg_problem();
        assert!(matches!(lift_product_point(&p, &[], 1), Err(HierarchyError::DimensionMismatch { .. })));
        assert!(matches!(
            lift_product_point(&p, &[PolytopePoint::new(vec![0.1, 0.2])], 1),
            Err(HierarchyError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            lift_product_point(&p, &[PolytopePoint::new(vec![2.0])], 1),
            Err(HierarchyError::PointOutside(_))
        ));
    }
}
