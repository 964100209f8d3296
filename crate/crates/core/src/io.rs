//! JSON formats for state spaces, problems and matrices.
//!
//! ```text
//! space:   {"name": "seg", "letters": ["x"],
//!           "facets": [{"constant": 0, "coefficients": {"x": 1}}, ...]}
//!      or  {"name": "U", "left_stochastic": {"rows": 4, "cols": 3}}
//! problem: {"spaces": [space, ...],
//!           "f": {"outputs": q, "shape": [l, l'] | null,
//!                 "terms": [[[coeff, {"<space>": "<letter>" | "unit"}], ...], ...]},
//!           "p": same as f with one output, optional}
//! matrix:  {"rows": r, "cols": c, "entries": [row-major values]}
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{AffineMap, HierarchyError, Problem, Term};
use crate::nmf::{NmfError, NonnegMatrix};
use crate::state_space::{FacetFunctional, StateSpace, StateSpaceError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown space {0:?}")]
    UnknownSpace(String),
    #[error("space {space:?} has no letter {letter:?}")]
    UnknownLetter { space: String, letter: String },
    #[error("declared {declared} outputs but listed {listed}")]
    OutputCount { declared: usize, listed: usize },
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Nmf(#[from] NmfError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FacetJson {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeJson {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceJson {
    Stochastic { name: String, left_stochastic: ShapeJson },
    Polytope { name: String, letters: Vec<String>, facets: Vec<FacetJson> },
}

pub type TermJson = (f64, BTreeMap<String, String>);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapJson {
    pub outputs: usize,
    #[serde(default)]
    pub shape: Option<(usize, usize)>,
    pub terms: Vec<Vec<TermJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub spaces: Vec<SpaceJson>,
    pub f: MapJson,
    #[serde(default)]
    pub p: Option<MapJson>,
}

impl SpaceJson {
    pub fn build(&self) -> Result<StateSpace, IoError> {
        match self {
            SpaceJson::Stochastic { name, left_stochastic } => {
                Ok(StateSpace::left_stochastic(name, left_stochastic.rows, left_stochastic.cols)?)
            }
            SpaceJson::Polytope { name, letters, facets } => {
                let mut fs = Vec::with_capacity(facets.len());
                for f in facets {
                    let mut coeffs = Vec::with_capacity(f.coefficients.len());
                    for (letter, &c) in &f.coefficients {
                        let i = letters.iter().position(|l| l == letter).ok_or_else(|| IoError::UnknownLetter {
                            space: name.clone(),
                            letter: letter.clone(),
                        })?;
                        coeffs.push((i, c));
                    }
                    fs.push(FacetFunctional::new(f.constant, coeffs));
                }
                Ok(StateSpace::polytope(name.clone(), letters.len(), fs, letters.clone())?)
            }
        }
    }
}

impl MapJson {
    pub fn build(&self, spaces: &[StateSpace]) -> Result<AffineMap, IoError> {
        if self.terms.len() != self.outputs {
            return Err(IoError::OutputCount { declared: self.outputs, listed: self.terms.len() });
        }
        let mut outputs = Vec::with_capacity(self.outputs);
        for terms in &self.terms {
            let mut out = Vec::with_capacity(terms.len());
            for (coeff, letters) in terms {
                let mut slots = vec![None; spaces.len()];
                for (space, letter) in letters {
                    let s = spaces
                        .iter()
                        .position(|sp| sp.name() == space)
                        .ok_or_else(|| IoError::UnknownSpace(space.clone()))?;
                    if letter != "unit" {
                        let c = spaces[s].letter_index(letter).ok_or_else(|| IoError::UnknownLetter {
                            space: space.clone(),
                            letter: letter.clone(),
                        })?;
                        slots[s] = Some(c as u32);
                    }
                }
                out.push(Term::new(*coeff, slots));
            }
            outputs.push(out);
        }
        let map = AffineMap::new(spaces.len(), outputs)?;
        Ok(match self.shape {
            Some((r, c)) => map.with_shape(r, c)?,
            None => map,
        })
    }
}

impl ProblemJson {
    pub fn build(&self) -> Result<Problem, IoError> {
        let spaces = self.spaces.iter().map(SpaceJson::build).collect::<Result<Vec<_>, _>>()?;
        let f = self.f.build(&spaces)?;
        let p = match &self.p {
            Some(p) => p.build(&spaces)?,
            None => AffineMap::zero(spaces.len(), 1),
        };
        Ok(Problem::with_objective(spaces, f, p)?)
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

pub fn parse_problem(text: &str) -> Result<Problem, IoError> {
    serde_json::from_str::<ProblemJson>(text)?.build()
}

pub fn read_problem(path: &Path) -> Result<Problem, IoError> {
    parse_problem(&read(path)?)
}

pub fn parse_matrix(text: &str) -> Result<NonnegMatrix, IoError> {
    Ok(serde_json::from_str::<NonnegMatrix>(text)?.validated()?)
}

pub fn read_matrix(path: &Path) -> Result<NonnegMatrix, IoError> {
    parse_matrix(&read(path)?)
}
