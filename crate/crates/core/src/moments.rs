//! Symmetrized moment indices.
//!
//! A level-`n` moment variable is labelled by a word with `n` letter slots
//! per state space. Symmetry under permuting the copies of each space means
//! only the multiset of coordinate letters in each space matters, and unit
//! letters are implicit padding. A [`MomentIndex`] stores those multisets as
//! sorted lists.

use std::fmt;

use thiserror::Error;

use crate::state_space::StateSpace;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MomentError {
    #[error("space {space} receives more than {level} coordinate letters")]
    LevelOverflow { space: usize, level: usize },
    #[error("unknown letter: space {space}, coordinate {coordinate:?}")]
    UnknownLetter { space: usize, coordinate: Option<usize> },
    #[error("index has {got} spaces, expected {expected}")]
    SpaceCountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LetterKind {
    Unit,
    Coordinate(usize),
}

/// One basis letter of a space's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub space: usize,
    pub kind: LetterKind,
}

impl Letter {
    pub fn unit(space: usize) -> Self {
        Letter { space, kind: LetterKind::Unit }
    }

    pub fn coord(space: usize, index: usize) -> Self {
        Letter { space, kind: LetterKind::Coordinate(index) }
    }
}

/// Canonical label of a symmetrized moment variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentIndex {
    level: usize,
    per_space: Vec<Vec<u32>>,
}

impl MomentIndex {
    /// The empty word, the normalization variable.
    pub fn empty(level: usize, num_spaces: usize) -> Self {
        MomentIndex { level, per_space: vec![Vec::new(); num_spaces] }
    }

    /// Builds an index from per-space coordinate lists, sorting each.
    pub fn from_multisets(level: usize, mut per_space: Vec<Vec<u32>>) -> Result<Self, MomentError> {
        for (s, m) in per_space.iter_mut().enumerate() {
            if m.len() > level {
                return Err(MomentError::LevelOverflow { space: s, level });
            }
            m.sort_unstable();
        }
        Ok(MomentIndex { level, per_space })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn per_space(&self) -> &[Vec<u32>] {
        &self.per_space
    }

    pub fn num_spaces(&self) -> usize {
        self.per_space.len()
    }

    /// Number of coordinate letters in space `s`.
    pub fn degree(&self, s: usize) -> usize {
        self.per_space[s].len()
    }

    pub fn total_degree(&self) -> usize {
        self.per_space.iter().map(Vec::len).sum()
    }

    pub fn is_empty_word(&self) -> bool {
        self.per_space.iter().all(Vec::is_empty)
    }

    /// Same multisets at another level.
    pub fn at_level(&self, level: usize) -> Result<Self, MomentError> {
        Self::from_multisets(level, self.per_space.clone())
    }

    /// Adds letters, keeping each multiset sorted. Unit letters are ignored.
    pub fn extend(&self, extra: &[Letter], dims: &[usize]) -> Result<Self, MomentError> {
        let mut out = self.clone();
        for l in extra {
            out.push_letter(*l, dims)?;
        }
        Ok(out)
    }

    /// Adds one coordinate per space where `coords[s]` is set. Capacity is
    /// checked; coordinate ranges are the caller's responsibility.
    pub fn extend_coords(&self, coords: &[Option<u32>]) -> Option<Self> {
        let mut out = self.clone();
        for (s, c) in coords.iter().enumerate() {
            if let Some(c) = *c {
                let m = &mut out.per_space[s];
                if m.len() >= self.level {
                    return None;
                }
                let pos = m.partition_point(|&x| x <= c);
                m.insert(pos, c);
            }
        }
        Some(out)
    }

    /// Multiset union with another index at this index's level.
    pub fn union(&self, other: &MomentIndex) -> Option<Self> {
        let mut out = self.clone();
        for (s, m) in other.per_space.iter().enumerate() {
            let target = &mut out.per_space[s];
            if target.len() + m.len() > self.level {
                return None;
            }
            target.extend_from_slice(m);
            target.sort_unstable();
        }
        Some(out)
    }

    fn push_letter(&mut self, l: Letter, dims: &[usize]) -> Result<(), MomentError> {
        let Some(&dim) = dims.get(l.space) else {
            return Err(MomentError::UnknownLetter { space: l.space, coordinate: None });
        };
        if let LetterKind::Coordinate(c) = l.kind {
            if c >= dim {
                return Err(MomentError::UnknownLetter { space: l.space, coordinate: Some(c) });
            }
            let m = &mut self.per_space[l.space];
            if m.len() >= self.level {
                return Err(MomentError::LevelOverflow { space: l.space, level: self.level });
            }
            let c = c as u32;
            let pos = m.partition_point(|&x| x <= c);
            m.insert(pos, c);
        }
        Ok(())
    }

    /// Canonical column name, e.g. `y[U11+U12;V23]`.
    pub fn name(&self, spaces: &[StateSpace]) -> String {
        let mut out = String::from("y[");
        for (s, m) in self.per_space.iter().enumerate() {
            if s > 0 {
                out.push(';');
            }
            for (k, &c) in m.iter().enumerate() {
                if k > 0 {
                    out.push('+');
                }
                out.push_str(&spaces[s].letter_names()[c as usize]);
            }
        }
        out.push(']');
        out
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y{}[", self.level)?;
        for (s, m) in self.per_space.iter().enumerate() {
            if s > 0 {
                f.write_str(";")?;
            }
            let parts: Vec<String> = m.iter().map(|c| format!("{s}.{c}")).collect();
            f.write_str(&parts.join("+"))?;
        }
        f.write_str("]")
    }
}

pub fn dims_of(spaces: &[StateSpace]) -> Vec<usize> {
    spaces.iter().map(StateSpace::free_dim).collect()
}

/// Canonical index of a word; independent of letter order.
pub fn canonical_index(level: usize, letters: &[Letter], dims: &[usize]) -> Result<MomentIndex, MomentError> {
    MomentIndex::empty(level, dims.len()).extend(letters, dims)
}

/// All sorted lists of length ≤ `max_len` over `0..alphabet`, in
/// lexicographic order (a prefix sorts before its extensions).
pub fn multisets(alphabet: usize, max_len: usize) -> Vec<Vec<u32>> {
    fn walk(alphabet: u32, max_len: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        out.push(current.clone());
        if current.len() == max_len {
            return;
        }
        let start = current.last().copied().unwrap_or(0);
        for c in start..alphabet {
            current.push(c);
            walk(alphabet, max_len, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    walk(alphabet as u32, max_len, &mut Vec::new(), &mut out);
    out
}

/// Every canonical index at `level`, strictly increasing.
pub fn enumerate_indices(level: usize, dims: &[usize]) -> Vec<MomentIndex> {
    let per_space: Vec<Vec<Vec<u32>>> = dims.iter().map(|&d| multisets(d, level)).collect();
    let mut out = vec![MomentIndex::empty(level, 0)];
    for choices in &per_space {
        let mut next = Vec::with_capacity(out.len() * choices.len());
        for prefix in &out {
            for m in choices {
                let mut idx = prefix.clone();
                idx.per_space.push(m.clone());
                next.push(idx);
            }
        }
        out = next;
    }
    out
}

/// `C(n + k − 1, k)`: multisets of size `k` from `n` symbols.
pub fn multichoose(n: u128, k: u128) -> u128 {
    if k == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    let top = n + k - 1;
    let k = k.min(top - k);
    (1..=k).fold(1u128, |acc, i| acc * (top - k + i) / i)
}

/// `Π_s multichoose(d_s + 1, level)`, the length of [`enumerate_indices`].
pub fn count_indices(level: usize, dims: &[usize]) -> u128 {
    dims.iter().map(|&d| multichoose(d as u128 + 1, level as u128)).product()
}
