//! Level-`n` LP relaxations of `f(x_1, …, x_m) = 0` over a product of state
//! spaces.
//!
//! Two variants are built over the same symmetrized moment variables:
//!
//! * [`Variant::Plus`] imposes `(f ⊗ id^{⊗(n−1)}) = 0`, i.e. every output of
//!   `f` multiplied by every word that still fits in the remaining slots.
//! * [`Variant::Polarized`] imposes `Π((f ⊗ f)(y₂)) = 0` on the two-copy
//!   marginal only, for a polarization map `Π`.
//!
//! Both share normalization, box bounds and the facet-extension rows that
//! keep the variables inside the level-`n` maximal tensor power.

mod affine;
mod build;
mod lift;
mod polarization;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use affine::{AffineMap, Problem, Term};
pub use build::{build_lp, build_plus_lp, build_polarized_lp, HierarchyLp, RowCounts};
pub use lift::{lift_product_point, MomentAssignment};
pub use polarization::{check_pi_soundness, Polarization, PolarizationMap, Weighting};

use crate::moments::MomentError;

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("level {level} is below the minimum {required} for this variant")]
    LevelTooLow { level: usize, required: usize },
    #[error("matrix-product polarization needs an output shape")]
    ShapeRequired,
    #[error("output shape {rows}x{cols} does not match {outputs} outputs")]
    ShapeMismatch { rows: usize, cols: usize, outputs: usize },
    #[error("map needs {needed} slots in space {space} but level is {level}")]
    CapacityError { space: usize, needed: usize, level: usize },
    #[error("invalid affine map: {0}")]
    InvalidMap(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point for space {0} lies outside it")]
    PointOutside(String),
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// Which constraint rows describe the level-`n` state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintFamily {
    /// One facet times every nonnegative word with a free slot.
    #[default]
    PaperLite,
    /// Every product of facets with at most `n` factors per space.
    FullFacetProducts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plus,
    Polarized(PolarizationMap),
}

impl Default for Variant {
    fn default() -> Self {
        Variant::Plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchySpec {
    pub level: usize,
    pub variant: Variant,
    pub family: ConstraintFamily,
}

impl HierarchySpec {
    pub fn plus(level: usize) -> Self {
        HierarchySpec { level, variant: Variant::Plus, family: ConstraintFamily::PaperLite }
    }

    pub fn polarized(level: usize, pi: PolarizationMap) -> Self {
        HierarchySpec { level, variant: Variant::Polarized(pi), family: ConstraintFamily::PaperLite }
    }

    pub fn with_family(mut self, family: ConstraintFamily) -> Self {
        self.family = family;
        self
    }

    pub fn min_level(&self) -> usize {
        match self.variant {
            Variant::Plus => 1,
            Variant::Polarized(_) => 2,
        }
    }

    pub fn validate(&self) -> Result<(), HierarchyError> {
        if self.level < self.min_level() {
            return Err(HierarchyError::LevelTooLow { level: self.level, required: self.min_level() });
        }
        Ok(())
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintFamily::PaperLite => "lite",
            ConstraintFamily::FullFacetProducts => "full",
        })
    }
}

impl FromStr for ConstraintFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lite" => Ok(ConstraintFamily::PaperLite),
            "full" => Ok(ConstraintFamily::FullFacetProducts),
            other => Err(format!("unknown constraint family {other:?} (expected lite or full)")),
        }
    }
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Plus => "plus",
            Variant::Polarized(_) => "polarized",
        }
    }
}
