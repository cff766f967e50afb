//! Permutations of neurons within and across hidden layers.
//!
//! A [`LayerPermutation`] relabels the neurons of one layer: `images[i]`
//! is the new index of neuron `i`. Indices are zero-based internally;
//! [`LayerPermutation::one_based`] and [`LayerPermutation::from_one_based`]
//! convert at the user-facing boundary.
//!
//! Composition follows function notation: `p.compose(&q)` maps `i` to
//! `p(q(i))`, i.e. `q` acts first. A [`NetworkPermutation`] bundles one
//! layer permutation per hidden layer.

use rand::Rng;

use crate::error::{Error, Result};

/// Bijective relabelling of one layer's neurons.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LayerPermutation {
    images: Vec<usize>,
}

impl LayerPermutation {
    pub fn identity(n: usize) -> Self {
        LayerPermutation {
            images: (0..n).collect(),
        }
    }

    /// Builds a permutation from zero-based images, rejecting anything
    /// that is not a bijection on `0..images.len()`.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut hit = vec![false; n];
        for &img in &images {
            if img >= n || hit[img] {
                return Err(Error::NotABijection { images, len: n });
            }
            hit[img] = true;
        }
        Ok(LayerPermutation { images })
    }

    /// Builds a permutation from one-based images, as written in files
    /// and command-line arguments.
    pub fn from_one_based(one_based: &[usize]) -> Result<Self> {
        let n = one_based.len();
        if one_based.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::NotABijection {
                images: one_based.to_vec(),
                len: n,
            });
        }
        Self::from_images(one_based.iter().map(|&i| i - 1).collect())
    }

    /// The swap of `i` and `j` on a layer of width `n` (zero-based).
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        assert!(i < n && j < n, "transposition indices out of range");
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(i, j);
        LayerPermutation { images }
    }

    /// Uniformly random permutation drawn by a Fisher–Yates shuffle.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            images.swap(i, j);
        }
        LayerPermutation { images }
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &img)| i == img)
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.images.len()];
        for (i, &img) in self.images.iter().enumerate() {
            images[img] = i;
        }
        LayerPermutation { images }
    }

    /// `self` after `other`: the result maps `i` to `self(other(i))`.
    ///
    /// Panics if the lengths differ; same-width layers are the caller's
    /// responsibility at this level.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(
            self.images.len(),
            other.images.len(),
            "composing permutations of different lengths"
        );
        LayerPermutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    /// Reorders a slice so that `out[self(i)] = items[i]`.
    pub fn permute<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(self.images.len(), items.len(), "length mismatch");
        let mut out = items.to_vec();
        for (i, &img) in self.images.iter().enumerate() {
            out[img] = items[i].clone();
        }
        out
    }

    /// The cycle decomposition written as swaps, in application order:
    /// performing the swaps left to right reproduces this permutation.
    /// Each cycle starts at its smallest element, so every pair has
    /// `i < j`.
    fn transposition_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.images.len();
        let mut seen = vec![false; n];
        let mut pairs = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut cur = self.images[start];
            let mut cycle = Vec::new();
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.images[cur];
            }
            // (start a1 .. am) = (start am) ∘ .. ∘ (start a1), rightmost
            // first, so the application order is (start a1), .., (start am).
            pairs.extend(cycle.into_iter().map(|a| (start, a)));
        }
        pairs
    }
}

/// One layer permutation per hidden layer of a network.
///
/// The input and output layers are never permuted: relabelling them would
/// change which coordinate carries which feature or prediction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetworkPermutation {
    per_layer: Vec<LayerPermutation>,
}

impl NetworkPermutation {
    pub fn new(per_layer: Vec<LayerPermutation>) -> Self {
        NetworkPermutation { per_layer }
    }

    pub fn identity(hidden_widths: &[usize]) -> Self {
        NetworkPermutation {
            per_layer: hidden_widths
                .iter()
                .map(|&n| LayerPermutation::identity(n))
                .collect(),
        }
    }

    pub fn random<R: Rng>(hidden_widths: &[usize], rng: &mut R) -> Self {
        NetworkPermutation {
            per_layer: hidden_widths
                .iter()
                .map(|&n| LayerPermutation::random(n, rng))
                .collect(),
        }
    }

    pub fn per_layer(&self) -> &[LayerPermutation] {
        &self.per_layer
    }

    pub fn widths(&self) -> Vec<usize> {
        self.per_layer.iter().map(LayerPermutation::len).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.per_layer.iter().all(LayerPermutation::is_identity)
    }

    pub fn inverse(&self) -> Self {
        NetworkPermutation {
            per_layer: self
                .per_layer
                .iter()
                .map(LayerPermutation::inverse)
                .collect(),
        }
    }

    /// `self` after `other`, layer by layer. Fails if the widths differ.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.widths() != other.widths() {
            return Err(Error::PermutationShape {
                expected: self.widths(),
                got: other.widths(),
            });
        }
        Ok(NetworkPermutation {
            per_layer: self
                .per_layer
                .iter()
                .zip(&other.per_layer)
                .map(|(p, q)| p.compose(q))
                .collect(),
        })
    }

    /// Writes the permutation as a sequence of single-neuron swaps
    /// `(layer, i, j)`, all one-based with `i < j`. Performing the swaps
    /// in order reproduces the permutation exactly.
    pub fn transpositions(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (idx, layer) in self.per_layer.iter().enumerate() {
            for (i, j) in layer.transposition_pairs() {
                out.push((idx + 1, i + 1, j + 1));
            }
        }
        out
    }
}
