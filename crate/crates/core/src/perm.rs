//! Permutations of `{0, .., n-1}` in one-line notation and their reduced
//! words in the adjacent transpositions `tau_i = (i, i+1)`.
//!
//! Composition is `(s * r)(x) = s(r(x))`, so right-multiplying by `tau_i`
//! swaps positions `i` and `i+1` of the one-line notation.

use itertools::Itertools;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

/// Which descent to peel off first when bubble-sorting to a reduced word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    FirstDescent,
    LastDescent,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || seen[x] {
                return Err(Error::InvalidPermutation(images));
            }
            seen[x] = true;
        }
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// The adjacent transposition swapping `i` and `i+1` (0-based).
    pub fn transposition(n: usize, i: usize) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.swap(i, i + 1);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Self(inv)
    }

    /// Coxeter length, the number of inversions.
    pub fn inversions(&self) -> usize {
        let v = &self.0;
        (0..v.len())
            .flat_map(|i| (i + 1..v.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| v[i] > v[j])
            .count()
    }

    /// A reduced word `[i_1, .., i_k]` with `self = tau_{i_1} ... tau_{i_k}`
    /// (0-based indices), obtained by bubble sorting.
    pub fn reduced_word(&self, sweep: Sweep) -> Vec<usize> {
        let mut v = self.0.clone();
        let mut rev = Vec::new();
        loop {
            let descent = match sweep {
                Sweep::FirstDescent => (0..v.len().saturating_sub(1)).find(|&i| v[i] > v[i + 1]),
                Sweep::LastDescent => (0..v.len().saturating_sub(1)).rev().find(|&i| v[i] > v[i + 1]),
            };
            match descent {
                Some(i) => {
                    v.swap(i, i + 1);
                    rev.push(i);
                }
                None => break,
            }
        }
        rev.reverse();
        rev
    }

    pub fn from_word(n: usize, word: &[usize]) -> Self {
        word.iter().fold(Self::identity(n), |acc, &i| {
            acc.compose(&Self::transposition(n, i))
        })
    }
}

/// All of `S_n`, in lexicographic order.
pub fn symmetric_group(n: usize) -> Vec<Permutation> {
    (0..n).permutations(n).map(Permutation).collect()
}
