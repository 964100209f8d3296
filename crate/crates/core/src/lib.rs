//! Polarization-hierarchy LP relaxations.
//!
//! Polynomial feasibility problems `f(x_1, …, x_m) = 0` over products of
//! polytopes are relaxed into linear programs over symmetrized moment
//! variables. Infeasibility at any level certifies that no solution exists.
//! The [`nmf`] module applies this to lower-bounding nonnegative matrix rank.

pub mod hierarchy;
pub mod io;
pub mod lp;
pub mod moments;
pub mod nmf;
pub mod state_space;

pub use hierarchy::{
    AffineMap, ConstraintFamily, HierarchyLp, HierarchySpec, PolarizationMap, Problem, Variant,
};
pub use lp::{LinearProgram, LpStatus, SolveOutcome, Solver};
pub use moments::{Letter, MomentIndex};
pub use state_space::{FacetFunctional, PolytopePoint, StateSpace};
