use std::collections::{BTreeMap, HashMap};

use super::affine::{Problem, Term};
use super::lift::MomentAssignment;
use super::polarization::{Polarization, PolarizationMap};
use super::{ConstraintFamily, HierarchyError, HierarchySpec, Variant};
use crate::lp::{LinearProgram, Relation, SparseRow};
use crate::moments::{enumerate_indices, multisets, MomentIndex};
use crate::state_space::{FacetFunctional, StateSpace};

/// Number of rows generated per family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RowCounts {
    pub facet: usize,
    pub constraint_map: usize,
    pub polarized: usize,
}

/// A built relaxation together with its column labels.
#[derive(Debug, Clone)]
pub struct HierarchyLp {
    pub lp: LinearProgram,
    pub indices: Vec<MomentIndex>,
    pub spec: HierarchySpec,
    pub counts: RowCounts,
    lookup: HashMap<MomentIndex, usize>,
}

impl HierarchyLp {
    pub fn column(&self, idx: &MomentIndex) -> Option<usize> {
        self.lookup.get(idx).copied()
    }

    pub fn level(&self) -> usize {
        self.spec.level
    }

    /// Column vector of an assignment at the same level. Missing indices
    /// read as zero.
    pub fn vector(&self, assignment: &MomentAssignment) -> Vec<f64> {
        let mut x = vec![0.0; self.indices.len()];
        for (idx, v) in assignment.iter() {
            if let Some(j) = self.column(idx) {
                x[j] = *v;
            }
        }
        x
    }

    /// Labels a primal vector with its moment indices.
    pub fn assignment(&self, x: &[f64]) -> MomentAssignment {
        MomentAssignment::new(self.spec.level, self.indices.iter().cloned().zip(x.iter().copied()).collect())
    }
}

pub fn build_plus_lp(problem: &Problem, level: usize, family: ConstraintFamily) -> Result<HierarchyLp, HierarchyError> {
    build_lp(problem, &HierarchySpec { level, variant: Variant::Plus, family })
}

pub fn build_polarized_lp(
    problem: &Problem,
    level: usize,
    pi: PolarizationMap,
    family: ConstraintFamily,
) -> Result<HierarchyLp, HierarchyError> {
    build_lp(problem, &HierarchySpec { level, variant: Variant::Polarized(pi), family })
}

/// Builds the level-`spec.level` relaxation of `problem`.
pub fn build_lp(problem: &Problem, spec: &HierarchySpec) -> Result<HierarchyLp, HierarchyError> {
    spec.validate()?;
    let n = spec.level;
    let f = &problem.constraint_map;
    for r in 0..f.output_dim() {
        for s in 0..problem.spaces.len() {
            if f.needs(r, s) > n {
                return Err(HierarchyError::CapacityError { space: s, needed: f.needs(r, s), level: n });
            }
        }
    }
    if let Variant::Polarized(pi) = spec.variant {
        // Fail on a missing shape before doing any work.
        pi.weighting(f.output_dim(), f.output_shape())?;
    }

    let mut b = Builder::new(problem, n);
    b.add_columns();
    match spec.family {
        ConstraintFamily::PaperLite => b.add_lite_facets(),
        ConstraintFamily::FullFacetProducts => b.add_facet_products(),
    }
    match spec.variant {
        Variant::Plus => b.add_map_extensions(),
        Variant::Polarized(pi) => b.add_polarized(&pi)?,
    }
    b.set_objective();

    let Builder { lp, indices, lookup, counts, .. } = b;
    Ok(HierarchyLp { lp, indices, spec: *spec, counts, lookup })
}

struct Builder<'a> {
    problem: &'a Problem,
    level: usize,
    lp: LinearProgram,
    indices: Vec<MomentIndex>,
    lookup: HashMap<MomentIndex, usize>,
    counts: RowCounts,
}

/// Smallest interval containing `{a·b : a ∈ x, b ∈ y}`.
fn interval_mul(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let c = [x.0 * y.0, x.0 * y.1, x.1 * y.0, x.1 * y.1];
    (
        c.iter().copied().fold(f64::INFINITY, f64::min),
        c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

impl<'a> Builder<'a> {
    fn new(problem: &'a Problem, level: usize) -> Self {
        let indices = enumerate_indices(level, &problem.dims());
        let lookup = indices.iter().cloned().enumerate().map(|(j, idx)| (idx, j)).collect();
        let name = format!("hierarchy_n{level}");
        Builder { problem, level, lp: LinearProgram::new(name), indices, lookup, counts: RowCounts::default() }
    }

    fn spaces(&self) -> &[StateSpace] {
        &self.problem.spaces
    }

    fn col(&self, idx: &MomentIndex) -> usize {
        self.lookup[idx]
    }

    /// Bounds are the interval products of the coordinate ranges; the empty
    /// word is fixed to 1.
    fn add_columns(&mut self) {
        for idx in &self.indices {
            let mut box_ = (1.0, 1.0);
            for (s, m) in idx.per_space().iter().enumerate() {
                let ranges = self.problem.spaces[s].coordinate_ranges();
                for &c in m {
                    box_ = interval_mul(box_, ranges[c as usize]);
                }
            }
            self.lp.add_variable(idx.name(&self.problem.spaces), box_.0, box_.1);
        }
    }

    fn nonnegative_word(&self, idx: &MomentIndex) -> bool {
        idx.per_space()
            .iter()
            .enumerate()
            .all(|(s, m)| m.iter().all(|&c| self.spaces()[s].is_nonnegative(c as usize)))
    }

    fn with_letter(&self, idx: &MomentIndex, s: usize, c: usize) -> MomentIndex {
        let mut coords = vec![None; idx.num_spaces()];
        coords[s] = Some(c as u32);
        idx.extend_coords(&coords).expect("caller checked capacity")
    }

    /// `g · w ≥ 0` for every facet `g` and nonnegative word `w` with a free
    /// slot in `g`'s space. Bare coordinate facets are covered by the bounds.
    fn add_lite_facets(&mut self) {
        let mut rows = Vec::new();
        for s in 0..self.spaces().len() {
            for g in self.spaces()[s].facets() {
                if g.as_coordinate_nonnegativity().is_some() {
                    continue;
                }
                for idx in &self.indices {
                    if idx.degree(s) >= self.level || !self.nonnegative_word(idx) {
                        continue;
                    }
                    let mut pairs = Vec::with_capacity(g.coefficients.len() + 1);
                    if g.constant != 0.0 {
                        pairs.push((self.col(idx), g.constant));
                    }
                    for (&c, &a) in &g.coefficients {
                        pairs.push((self.col(&self.with_letter(idx, s, c)), a));
                    }
                    rows.push(SparseRow::from_pairs(pairs));
                }
            }
        }
        for row in rows {
            if !row.is_empty() {
                self.lp.add_constraint(row, Relation::GreaterEq, 0.0);
                self.counts.facet += 1;
            }
        }
    }

    /// Every product of at most `n` facets per space, expanded into monomials.
    fn add_facet_products(&mut self) {
        let per_space: Vec<Vec<(bool, BTreeMap<Vec<u32>, f64>)>> =
            self.spaces().iter().map(|sp| facet_products(sp.facets(), self.level)).collect();
        let mut combos: Vec<(bool, BTreeMap<Vec<Vec<u32>>, f64>)> = vec![(true, BTreeMap::from([(Vec::new(), 1.0)]))];
        for choices in &per_space {
            let mut next = Vec::with_capacity(combos.len() * choices.len());
            for (bare, poly) in &combos {
                for (bare_s, poly_s) in choices {
                    let mut out: BTreeMap<Vec<Vec<u32>>, f64> = BTreeMap::new();
                    for (key, a) in poly {
                        for (m, c) in poly_s {
                            let mut k = key.clone();
                            k.push(m.clone());
                            *out.entry(k).or_insert(0.0) += a * c;
                        }
                    }
                    next.push((*bare && *bare_s, out));
                }
            }
            combos = next;
        }
        for (bare, poly) in combos {
            // Pure coordinate products (and the empty product) restate bounds.
            if bare {
                continue;
            }
            let pairs = poly.into_iter().map(|(per_space, c)| {
                let idx = MomentIndex::from_multisets(self.level, per_space).expect("within capacity");
                (self.col(&idx), c)
            });
            let row = SparseRow::from_pairs(pairs.collect::<Vec<_>>());
            if !row.is_empty() {
                self.lp.add_constraint(row, Relation::GreaterEq, 0.0);
                self.counts.facet += 1;
            }
        }
    }

    fn term_row(&self, terms: &[Term], word: &MomentIndex) -> Option<SparseRow> {
        let mut pairs = Vec::with_capacity(terms.len());
        for t in terms {
            let idx = word.extend_coords(&t.letters)?;
            pairs.push((self.col(&idx), t.coeff));
        }
        Some(SparseRow::from_pairs(pairs))
    }

    /// `f_r · w = 0` for every output `r` and word `w` with room for `f_r`.
    fn add_map_extensions(&mut self) {
        let problem = self.problem;
        let f = &problem.constraint_map;
        let mut rows = Vec::new();
        for r in 0..f.output_dim() {
            if f.terms(r).is_empty() {
                continue;
            }
            for idx in &self.indices {
                let fits = (0..idx.num_spaces()).all(|s| idx.degree(s) + f.needs(r, s) <= self.level);
                if !fits {
                    continue;
                }
                if let Some(row) = self.term_row(f.terms(r), idx) {
                    rows.push(row);
                }
            }
        }
        for row in rows {
            if !row.is_empty() {
                self.lp.add_constraint(row, Relation::Eq, 0.0);
                self.counts.constraint_map += 1;
            }
        }
    }

    /// `Π((f ⊗ f)(y₂)) = 0`, expanded through `T_{r,r'}`.
    fn add_polarized<P: Polarization>(&mut self, pi: &P) -> Result<(), HierarchyError> {
        let problem = self.problem;
        let f = &problem.constraint_map;
        let weighting = pi.weighting(f.output_dim(), f.output_shape())?;
        let words: Vec<Vec<MomentIndex>> =
            f.outputs().iter().map(|terms| terms.iter().map(|t| t.word(self.level)).collect()).collect();
        let mut cache: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
        let mut rows = Vec::with_capacity(weighting.len());
        for out in &weighting {
            let mut pairs = Vec::new();
            for &(r, rp, w) in out {
                let t = cache.entry((r, rp)).or_insert_with(|| {
                    let mut acc = Vec::new();
                    for (t1, w1) in f.terms(r).iter().zip(&words[r]) {
                        for (t2, w2) in f.terms(rp).iter().zip(&words[rp]) {
                            let idx = w1.union(w2).expect("level is at least two");
                            acc.push((self.lookup[&idx], t1.coeff * t2.coeff));
                        }
                    }
                    acc
                });
                pairs.extend(t.iter().map(|&(j, c)| (j, w * c)));
            }
            rows.push(SparseRow::from_pairs(pairs));
        }
        for row in rows {
            if !row.is_empty() {
                self.lp.add_constraint(row, Relation::Eq, 0.0);
                self.counts.polarized += 1;
            }
        }
        Ok(())
    }

    fn set_objective(&mut self) {
        let empty = MomentIndex::empty(self.level, self.spaces().len());
        let row = self.term_row(self.problem.objective.terms(0), &empty).expect("single letters fit");
        self.lp.set_objective(row, 0.0);
    }
}

/// Expansions of all facet multisets of size `≤ level` as polynomials keyed
/// by sorted coordinate lists, flagged when every factor is a bare
/// coordinate facet.
fn facet_products(facets: &[FacetFunctional], level: usize) -> Vec<(bool, BTreeMap<Vec<u32>, f64>)> {
    multisets(facets.len(), level)
        .into_iter()
        .map(|choice| {
            let mut poly: BTreeMap<Vec<u32>, f64> = BTreeMap::from([(Vec::new(), 1.0)]);
            let mut bare = true;
            for &k in &choice {
                let g = &facets[k as usize];
                bare &= g.as_coordinate_nonnegativity().is_some();
                let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                for (m, a) in &poly {
                    if g.constant != 0.0 {
                        *next.entry(m.clone()).or_insert(0.0) += a * g.constant;
                    }
                    for (&c, &b) in &g.coefficients {
                        let mut m2 = m.clone();
                        let pos = m2.partition_point(|&x| x <= c as u32);
                        m2.insert(pos, c as u32);
                        *next.entry(m2).or_insert(0.0) += a * b;
                    }
                }
                poly = next;
            }
            poly.retain(|_, c| *c != 0.0);
            (bare, poly)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::affine::AffineMap;

    fn seg() -> StateSpace {
        StateSpace::polytope(
            "seg",
            1,
            vec![FacetFunctional::new(0.0, [(0, 1.0)]), FacetFunctional::new(1.0, [(0, -1.0)])],
            vec!["x".into()],
        )
        .unwrap()
    }

    #[test]
    fn interval_products() {
        assert_eq!(interval_mul((0.0, 1.0), (0.0, 1.0)), (0.0, 1.0));
        assert_eq!(interval_mul((-1.0, 2.0), (-3.0, 1.0)), (-6.0, 3.0));
    }

    #[test]
    fn segment_lite_rows() {
        let p = Problem::new(vec![seg()], AffineMap::zero(1, 0)).unwrap();
        let h = build_plus_lp(&p, 2, ConstraintFamily::PaperLite).unwrap();
        // Words: ∅, x, xx. Facet 1 − x extends over ∅ and x.
        assert_eq!(h.indices.len(), 3);
        assert_eq!(h.counts.facet, 2);
        assert_eq!(h.lp.lower()[0], 1.0);
        assert_eq!(h.lp.upper()[0], 1.0);
    }

    #[test]
    fn segment_full_rows() {
        let p = Problem::new(vec![seg()], AffineMap::zero(1, 0)).unwrap();
        let h = build_plus_lp(&p, 2, ConstraintFamily::FullFacetProducts).unwrap();
        // {g2}, {g1,g2}, {g2,g2}; {g1}, {g1,g1} and {} are bounds.
        assert_eq!(h.counts.facet, 3);
    }

    #[test]
    fn polarized_needs_level_two() {
        let p = Problem::new(vec![seg()], AffineMap::zero(1, 1)).unwrap();
        assert!(matches!(
            build_polarized_lp(&p, 1, PolarizationMap::Identity, ConstraintFamily::PaperLite),
            Err(HierarchyError::LevelTooLow { level: 1, required: 2 })
        ));
        assert!(matches!(
            build_polarized_lp(&p, 2, PolarizationMap::MatrixProduct, ConstraintFamily::PaperLite),
            Err(HierarchyError::ShapeRequired)
        ));
        assert!(matches!(
            build_plus_lp(&p, 0, ConstraintFamily::PaperLite),
            Err(HierarchyError::LevelTooLow { .. })
        ));
    }
}
