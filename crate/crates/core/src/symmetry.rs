//! Permutation symmetry of feed-forward networks.
//!
//! Relabelling the neurons of a hidden layer — moving row `i` of that
//! layer's weight matrix (and bias entry) to row `p(i)` while moving
//! column `i` of the next layer's matrix to column `p(i)` — leaves the
//! network function unchanged: every weight still connects the same pair
//! of neurons. The single-swap case is [`Network::neuron_switch`]; the
//! general case is [`Network::apply_permutation`].
//!
//! These relabellings form a group of size `n_1! · n_2! · … · n_{L-1}!`
//! ([`orbit_size`]), so every weight configuration sits in an orbit of
//! that many functionally identical siblings. [`Network::canonicalize`]
//! picks a deterministic representative of the orbit, and [`equivalent`]
//! decides whether two networks are relabellings of each other.

use std::cmp::Ordering;
use std::ops::Range;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{max_param_deviation, LayerWeights, Network};
use crate::perm::{LayerPermutation, NetworkPermutation};
use crate::scalar::Scalar;
use crate::BRUTE_FORCE_BUDGET;

/// Exact and logarithmic size of a network's relabelling orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitCount {
    /// The product of the hidden-layer factorials, exactly.
    pub exact: BigUint,
    /// Base-10 logarithm of the product, accumulated in floating point.
    pub log10: f64,
}

impl OrbitCount {
    /// Number of decimal digits of the exact count.
    pub fn digits(&self) -> usize {
        self.exact.to_string().len()
    }
}

/// Counts the weight configurations reachable by relabelling hidden
/// neurons: the product of the factorials of the hidden widths.
pub fn orbit_size(hidden_widths: &[usize]) -> Result<OrbitCount> {
    if hidden_widths.is_empty() {
        return Err(Error::EmptyWidths);
    }
    if hidden_widths.contains(&0) {
        return Err(Error::ZeroWidth);
    }
    let mut exact = BigUint::one();
    let mut log10 = 0.0_f64;
    for &n in hidden_widths {
        for k in 2..=n {
            exact *= BigUint::from(k);
            log10 += (k as f64).log10();
        }
    }
    Ok(OrbitCount { exact, log10 })
}

/// How [`equivalent`] searches for a relabelling witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquivalenceMode {
    /// Canonicalize both networks and compare the representatives.
    /// Falls back to a bounded search when sort keys tie exactly.
    Canonical,
    /// Try every relabelling in lexicographic order. Exact but limited
    /// to orbits of at most [`BRUTE_FORCE_BUDGET`] permutations.
    BruteForce,
}

/// Runs of canonical positions, per hidden layer, whose sort keys tie
/// exactly.
type TieRuns = Vec<Vec<Range<usize>>>;

/// Outcome of an equivalence check.
#[derive(Clone, Debug)]
pub struct EquivalenceVerdict<S> {
    /// Whether a relabelling maps the first network onto the second
    /// within the tolerance.
    pub equivalent: bool,
    /// A permutation `p` with `a.apply_permutation(&p) ≈ b`, when one
    /// was found.
    pub witness: Option<NetworkPermutation>,
    /// Deviation achieved by the best candidate examined: the winning
    /// witness when equivalent, the closest miss otherwise.
    pub max_deviation: S,
    /// True when canonical sort keys tied exactly somewhere; ties make
    /// the canonical representative ambiguous, so a tie-aware search
    /// decided the verdict.
    pub key_ties: bool,
}

impl<S: Scalar> Network<S> {
    /// Swaps hidden neurons `i` and `j` of hidden layer `layer` (all
    /// one-based): rows `i`, `j` of that layer's weights and bias, and
    /// columns `i`, `j` of the following layer's weights.
    ///
    /// The resulting network computes exactly the same function.
    pub fn neuron_switch(&self, layer: usize, i: usize, j: usize) -> Result<Self> {
        if self.layers.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let hidden = self.depth() - 1;
        if layer == 0 || layer > hidden {
            return Err(Error::NotHiddenLayer { layer, hidden });
        }
        let width = self.layers[layer - 1].out_dim();
        for index in [i, j] {
            if index == 0 || index > width {
                return Err(Error::NeuronOutOfRange {
                    layer,
                    index,
                    width,
                });
            }
        }
        let mut per_layer: Vec<LayerPermutation> = self
            .hidden_widths()
            .into_iter()
            .map(LayerPermutation::identity)
            .collect();
        per_layer[layer - 1] = LayerPermutation::transposition(width, i - 1, j - 1);
        self.apply_permutation(&NetworkPermutation::new(per_layer))
    }

    /// Relabels every hidden layer at once: neuron `i` of hidden layer
    /// `l` becomes neuron `p_l(i)`. Pure data movement — no arithmetic —
    /// so the result is bitwise determined by the input.
    pub fn apply_permutation(&self, p: &NetworkPermutation) -> Result<Self> {
        self.check_structure()?;
        let hidden = self.hidden_widths();
        if p.widths() != hidden {
            return Err(Error::PermutationShape {
                expected: hidden,
                got: p.widths(),
            });
        }
        let mut layers = self.layers.clone();
        for (idx, lp) in p.per_layer().iter().enumerate() {
            permute_hidden_layer(&mut layers, idx, lp);
        }
        Ok(Network::new(
            layers,
            self.hidden_activation,
            self.output_activation,
        ))
    }

    /// Draws a uniformly random relabelling of this network's hidden
    /// layers and applies it. The same seed always yields the same
    /// sibling; returns the permutation alongside the network.
    pub fn random_sibling(&self, seed: u64) -> Result<(Self, NetworkPermutation)> {
        self.check_structure()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = NetworkPermutation::random(&self.hidden_widths(), &mut rng);
        let net = self.apply_permutation(&p)?;
        Ok((net, p))
    }

    /// Deterministic orbit representative: hidden layers are reordered
    /// one after another, sorting each layer's neurons by their incoming
    /// weight row (then bias) in ascending lexicographic order.
    ///
    /// Returns the representative and the permutation that produced it,
    /// so `self.apply_permutation(&p)` equals the representative. Every
    /// relabelling of a network canonicalizes to the same representative
    /// whenever the sort keys are distinct at every layer.
    pub fn canonicalize(&self) -> Result<(Self, NetworkPermutation)> {
        let (net, perm, _ties) = self.canonicalize_with_ties()?;
        Ok((net, perm))
    }

    /// Canonicalization that also reports, per hidden layer, the runs of
    /// canonical positions whose sort keys tie exactly. Ties mean the
    /// representative is ambiguous within those runs.
    pub(crate) fn canonicalize_with_ties(&self) -> Result<(Self, NetworkPermutation, TieRuns)> {
        self.check_structure()?;
        self.check_finite()?;
        let mut current = self.clone();
        let mut per_layer = Vec::new();
        let mut all_ties = Vec::new();
        for idx in 0..current.depth() - 1 {
            let (order, ties) = sorted_layer_order(&current.layers[idx]);
            let lp = images_from_order(&order);
            permute_hidden_layer(&mut current.layers, idx, &lp);
            per_layer.push(lp);
            all_ties.push(ties);
        }
        Ok((current, NetworkPermutation::new(per_layer), all_ties))
    }
}

/// Moves hidden layer `idx`'s rows (and bias) and the next layer's
/// columns according to `lp`. Callers guarantee the shape chain holds.
/// Shared with gradient sets, which permute the same way as weights.
pub(crate) fn permute_hidden_layer<S: Scalar>(
    layers: &mut [LayerWeights<S>],
    idx: usize,
    lp: &LayerPermutation,
) {
    if lp.is_identity() {
        return;
    }
    let images = lp.images();
    layers[idx].weights = layers[idx].weights.permuted_rows(images);
    layers[idx].bias = layers[idx].bias.take().map(|b| lp.permute(&b));
    layers[idx + 1].weights = layers[idx + 1].weights.permuted_cols(images);
}

fn cmp_scalars<S: Scalar>(a: S, b: S) -> Ordering {
    a.partial_cmp(&b).expect("sort keys are finite")
}

/// Compares neurons `x` and `y` of a layer by incoming weight row, then
/// bias entry.
fn cmp_neuron_keys<S: Scalar>(layer: &LayerWeights<S>, x: usize, y: usize) -> Ordering {
    for (&wx, &wy) in layer.weights.row(x).iter().zip(layer.weights.row(y)) {
        match cmp_scalars(wx, wy) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    match &layer.bias {
        Some(b) => cmp_scalars(b[x], b[y]),
        None => Ordering::Equal,
    }
}

/// Stable ascending order of a layer's neurons by sort key, plus the
/// runs of new positions (length ≥ 2) whose keys tie exactly.
fn sorted_layer_order<S: Scalar>(layer: &LayerWeights<S>) -> (Vec<usize>, Vec<Range<usize>>) {
    let n = layer.out_dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| cmp_neuron_keys(layer, x, y));
    let mut ties = Vec::new();
    let mut run_start = 0;
    for k in 1..=n {
        let tied = k < n && cmp_neuron_keys(layer, order[k - 1], order[k]) == Ordering::Equal;
        if !tied {
            if k - run_start > 1 {
                ties.push(run_start..k);
            }
            run_start = k;
        }
    }
    (order, ties)
}

/// Converts a sorted order (`order[new] = old`) into a permutation
/// (`images[old] = new`).
fn images_from_order(order: &[usize]) -> LayerPermutation {
    let mut images = vec![0; order.len()];
    for (new_pos, &old) in order.iter().enumerate() {
        images[old] = new_pos;
    }
    LayerPermutation::from_images(images).expect("sort orders are bijections")
}

/// Decides whether `b` is a hidden-neuron relabelling of `a`, up to
/// entrywise deviation `tol` (absolute below one, relative above).
///
/// Networks must have the same architecture, activations and bias
/// pattern to be comparable at all; anything else is an error, not a
/// negative verdict.
pub fn equivalent<S: Scalar>(
    a: &Network<S>,
    b: &Network<S>,
    tol: S,
    mode: EquivalenceMode,
) -> Result<EquivalenceVerdict<S>> {
    a.check_structure()?;
    b.check_structure()?;
    let (arch_a, arch_b) = (a.architecture(), b.architecture());
    if arch_a != arch_b {
        return Err(Error::ArchitectureMismatch {
            left: arch_a,
            right: arch_b,
        });
    }
    if a.hidden_activation != b.hidden_activation || a.output_activation != b.output_activation {
        return Err(Error::ActivationMismatch);
    }
    for (idx, (la, lb)) in a.layers.iter().zip(&b.layers).enumerate() {
        if la.bias.is_some() != lb.bias.is_some() {
            return Err(Error::BiasPatternMismatch { layer: idx + 1 });
        }
    }
    a.check_finite()?;
    b.check_finite()?;
    match mode {
        EquivalenceMode::Canonical => equivalent_canonical(a, b, tol),
        EquivalenceMode::BruteForce => equivalent_brute_force(a, b, tol),
    }
}

fn equivalent_canonical<S: Scalar>(
    a: &Network<S>,
    b: &Network<S>,
    tol: S,
) -> Result<EquivalenceVerdict<S>> {
    let (ca, pa, ties_a) = a.canonicalize_with_ties()?;
    let (cb, pb, ties_b) = b.canonicalize_with_ties()?;
    let dev = max_param_deviation(&ca, &cb);
    let key_ties = ties_a.iter().any(|t| !t.is_empty()) || ties_b.iter().any(|t| !t.is_empty());
    if dev <= tol {
        // apply(a, pa) ≈ apply(b, pb)  ⇒  b ≈ apply(a, pb⁻¹ ∘ pa).
        let witness = pb.inverse().compose(&pa)?;
        return Ok(EquivalenceVerdict {
            equivalent: true,
            witness: Some(witness),
            max_deviation: dev,
            key_ties,
        });
    }
    if !key_ties {
        return Ok(EquivalenceVerdict {
            equivalent: false,
            witness: None,
            max_deviation: dev,
            key_ties,
        });
    }
    // Tied keys make the representative ambiguous: within a tied run the
    // sort may order neurons either way, and the choice reshuffles the
    // next layer's columns and thereby its sort too. Enumerate every
    // representative reachable by re-ordering tied runs (re-sorting
    // downstream after each choice) and compare against the other
    // network's representative, in both directions.
    let mut visited = 0u64;
    let mut best = dev;
    if let Some(q) = variant_search(a, &cb, tol, &mut visited, &mut best)? {
        // apply(a, q) ≈ cb = apply(b, pb)  ⇒  b ≈ apply(a, pb⁻¹ ∘ q).
        let witness = pb.inverse().compose(&q)?;
        let achieved = max_param_deviation(&a.apply_permutation(&witness)?, b);
        return Ok(EquivalenceVerdict {
            equivalent: true,
            witness: Some(witness),
            max_deviation: achieved,
            key_ties,
        });
    }
    if let Some(q) = variant_search(b, &ca, tol, &mut visited, &mut best)? {
        // apply(b, q) ≈ ca = apply(a, pa)  ⇒  b ≈ apply(a, q⁻¹ ∘ pa).
        let witness = q.inverse().compose(&pa)?;
        let achieved = max_param_deviation(&a.apply_permutation(&witness)?, b);
        return Ok(EquivalenceVerdict {
            equivalent: true,
            witness: Some(witness),
            max_deviation: achieved,
            key_ties,
        });
    }
    Ok(EquivalenceVerdict {
        equivalent: false,
        witness: None,
        max_deviation: best,
        key_ties,
    })
}

/// Searches the canonical representatives of `net` for one within `tol`
/// of `target`, recursing layer by layer so that tie-run choices at one
/// layer feed into the sort of the next. Returns the permutation from
/// `net` to the matching representative. Counts every representative
/// against the shared search budget.
fn variant_search<S: Scalar>(
    net: &Network<S>,
    target: &Network<S>,
    tol: S,
    visited: &mut u64,
    best: &mut S,
) -> Result<Option<NetworkPermutation>> {
    let mut acc: Vec<LayerPermutation> = Vec::new();
    let found = variant_recurse(net, target, 0, &mut acc, tol, visited, best)?;
    Ok(found.then(|| NetworkPermutation::new(acc)))
}

fn variant_recurse<S: Scalar>(
    current: &Network<S>,
    target: &Network<S>,
    idx: usize,
    acc: &mut Vec<LayerPermutation>,
    tol: S,
    visited: &mut u64,
    best: &mut S,
) -> Result<bool> {
    if idx == current.depth() - 1 {
        *visited += 1;
        if *visited > BRUTE_FORCE_BUDGET {
            return Err(Error::BruteForceBudget {
                size: format!("more than {BRUTE_FORCE_BUDGET}"),
                budget: BRUTE_FORCE_BUDGET,
            });
        }
        let dev = max_param_deviation(current, target);
        if dev < *best {
            *best = dev;
        }
        return Ok(dev <= tol);
    }
    let (order, ties) = sorted_layer_order(&current.layers[idx]);
    let base = images_from_order(&order);
    for sigma in tie_run_perms(current.layers[idx].out_dim(), &ties) {
        let lp = sigma.compose(&base);
        let mut next = current.clone();
        permute_hidden_layer(&mut next.layers, idx, &lp);
        acc.push(lp);
        if variant_recurse(&next, target, idx + 1, acc, tol, visited, best)? {
            return Ok(true);
        }
        acc.pop();
    }
    Ok(false)
}

/// All permutations of `0..n` that only move positions within the given
/// tie runs — exactly the reorderings the canonical sort cannot tell
/// apart. Yields the identity alone when there are no runs.
fn tie_run_perms(n: usize, ties: &[Range<usize>]) -> Box<dyn Iterator<Item = LayerPermutation>> {
    if ties.is_empty() {
        return Box::new(std::iter::once(LayerPermutation::identity(n)));
    }
    let runs: Vec<Range<usize>> = ties.to_vec();
    let assembly = runs.clone();
    let iter = runs
        .into_iter()
        .map(|r| {
            let len = r.len();
            r.permutations(len)
        })
        .multi_cartesian_product()
        .map(move |choice| {
            let mut images: Vec<usize> = (0..n).collect();
            for (r, v) in assembly.iter().zip(choice) {
                for (k, &img) in v.iter().enumerate() {
                    images[r.start + k] = img;
                }
            }
            LayerPermutation::from_images(images).expect("tie runs are disjoint")
        });
    Box::new(iter)
}

fn equivalent_brute_force<S: Scalar>(
    a: &Network<S>,
    b: &Network<S>,
    tol: S,
) -> Result<EquivalenceVerdict<S>> {
    let widths = a.hidden_widths();
    let mut size = BigUint::one();
    for &n in &widths {
        for k in 2..=n {
            size *= BigUint::from(k);
        }
    }
    if size > BigUint::from(BRUTE_FORCE_BUDGET) {
        return Err(Error::BruteForceBudget {
            size: size.to_string(),
            budget: BRUTE_FORCE_BUDGET,
        });
    }
    if widths.is_empty() {
        // No hidden layers: the orbit is the network itself.
        let dev = max_param_deviation(a, b);
        return Ok(EquivalenceVerdict {
            equivalent: dev <= tol,
            witness: (dev <= tol).then(|| NetworkPermutation::identity(&[])),
            max_deviation: dev,
            key_ties: false,
        });
    }
    let layer_perms: Vec<Vec<LayerPermutation>> = widths
        .iter()
        .map(|&n| {
            (0..n)
                .permutations(n)
                .map(|images| {
                    LayerPermutation::from_images(images).expect("permutations are bijections")
                })
                .collect()
        })
        .collect();
    let mut best_dev = S::infinity();
    for combo in layer_perms
        .iter()
        .map(|perms| perms.iter())
        .multi_cartesian_product()
    {
        let p = NetworkPermutation::new(combo.into_iter().cloned().collect());
        let dev = max_param_deviation(&a.apply_permutation(&p)?, b);
        if dev < best_dev {
            best_dev = dev;
        }
        if dev <= tol {
            return Ok(EquivalenceVerdict {
                equivalent: true,
                witness: Some(p),
                max_deviation: dev,
                key_ties: false,
            });
        }
    }
    Ok(EquivalenceVerdict {
        equivalent: false,
        witness: None,
        max_deviation: best_dev,
        key_ties: false,
    })
}
