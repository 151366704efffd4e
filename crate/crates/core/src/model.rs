//! Models (subsets of `{1..p}`) and paths (ordered, duplicate-free tuples).

use std::cmp::Ordering;
use std::fmt;

use crate::error::{domain, Result};

/// A subset of the predictor indices `{1, ..., p}`, stored sorted.
///
/// Ordering is canonical: first by size, then lexicographically by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Model {
    indices: Vec<usize>,
    p: usize,
}

impl Model {
    /// Builds a model from arbitrary-order indices. Duplicates and
    /// out-of-range indices are rejected.
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return domain(format!("duplicate index {} in model", w[0]));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > p) {
            return domain(format!("index {bad} outside [1, {p}]"));
        }
        Ok(Self { indices, p })
    }

    pub fn empty(p: usize) -> Self {
        Self {
            indices: Vec::new(),
            p,
        }
    }

    /// Caller guarantees `indices` is sorted, duplicate-free and in range.
    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>, p: usize) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.iter().all(|&i| i >= 1 && i <= p));
        Self { indices, p }
    }

    /// Decodes a bitmask over `p` predictors (bit `j` set means index `j+1`).
    pub fn from_mask(mask: u64, p: usize) -> Self {
        let indices = (0..p).filter(|j| mask >> j & 1 == 1).map(|j| j + 1).collect();
        Self { indices, p }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Zero-based column positions of the included predictors.
    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|&i| i - 1)
    }

    /// Returns the model with `index` added if absent, removed if present.
    pub fn toggled(&self, index: usize) -> Self {
        let mut indices = self.indices.clone();
        match indices.binary_search(&index) {
            Ok(pos) => {
                indices.remove(pos);
            }
            Err(pos) => indices.insert(pos, index),
        }
        Self { indices, p: self.p }
    }

    /// Returns the model with `out` replaced by `into`. `out` must be
    /// included and `into` excluded.
    pub fn swapped(&self, out: usize, into: usize) -> Self {
        debug_assert!(self.contains(out) && !self.contains(into));
        let mut indices: Vec<usize> = self.indices.iter().copied().filter(|&i| i != out).collect();
        let pos = indices.binary_search(&into).unwrap_err();
        indices.insert(pos, into);
        Self { indices, p: self.p }
    }
}

impl Ord for Model {
    fn cmp(&self, other: &Self) -> Ordering {
        self.indices
            .len()
            .cmp(&other.indices.len())
            .then_with(|| self.indices.cmp(&other.indices))
            .then_with(|| self.p.cmp(&other.p))
    }
}

impl PartialOrd for Model {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (pos, i) in self.indices.iter().enumerate() {
            if pos > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// An ordered, duplicate-free tuple of predictor indices in `[1, p]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    indices: Vec<usize>,
    p: usize,
}

impl Path {
    pub fn new(indices: Vec<usize>, p: usize) -> Result<Self> {
        let mut seen = vec![false; p + 1];
        for &i in &indices {
            if i == 0 || i > p {
                return domain(format!("index {i} outside [1, {p}]"));
            }
            if seen[i] {
                return domain(format!("index {i} repeated in path"));
            }
            seen[i] = true;
        }
        Ok(Self { indices, p })
    }

    pub fn empty(p: usize) -> Self {
        Self {
            indices: Vec::new(),
            p,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The model this path reaches.
    pub fn model(&self) -> Model {
        let mut indices = self.indices.clone();
        indices.sort_unstable();
        Model::from_sorted_unchecked(indices, self.p)
    }
}
