//! Gradients, full-batch gradient descent, and equivariance experiments.
//!
//! The gradient of the loss has one entry per weight, so a
//! [`GradientSet`] mirrors the network's layer layout and permutes the
//! same way weights do. That makes the symmetry statements precise:
//! relabelling before differentiating gives the relabelled gradient, and
//! two relabelled networks trained side by side stay relabellings of
//! each other step for step. [`equivariance_experiment`] measures both.
//!
//! All accumulation orders are fixed (samples in dataset order, indices
//! ascending), so every function here is bitwise reproducible.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{
    check_layer_structure, max_param_deviation, Dataset, LayerWeights, LossKind, Network,
};
use crate::perm::NetworkPermutation;
use crate::scalar::Scalar;
use crate::symmetry::permute_hidden_layer;

/// Loss gradient with respect to every parameter, laid out exactly like
/// the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet<S> {
    pub layers: Vec<LayerWeights<S>>,
}

impl<S: Scalar> GradientSet<S> {
    /// Zero gradient with the same shapes and bias pattern as `net`.
    pub fn zeros_like(net: &Network<S>) -> Self {
        GradientSet {
            layers: net
                .layers
                .iter()
                .map(|l| LayerWeights {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: l.bias.as_ref().map(|b| vec![S::zero(); b.len()]),
                })
                .collect(),
        }
    }

    /// Gradient entries in the network's canonical parameter order.
    pub fn params(&self) -> impl Iterator<Item = S> + '_ {
        self.layers.iter().flat_map(LayerWeights::params)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut S> {
        self.layers.iter_mut().flat_map(LayerWeights::params_mut)
    }

    /// Relabels gradient entries the way [`Network::apply_permutation`]
    /// relabels weights: rows and bias of hidden layer `l` by `p_l`,
    /// columns of the next layer by the same `p_l`.
    pub fn apply_permutation(&self, p: &NetworkPermutation) -> Result<Self> {
        check_layer_structure(&self.layers)?;
        let hidden: Vec<usize> = self.layers[..self.layers.len() - 1]
            .iter()
            .map(LayerWeights::out_dim)
            .collect();
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
        Ok(GradientSet { layers })
    }

    /// Largest entrywise deviation from another gradient of the same
    /// shape (absolute below one, relative above).
    pub fn max_deviation(&self, other: &Self) -> S {
        let mine: Vec<S> = self.params().collect();
        let theirs: Vec<S> = other.params().collect();
        assert_eq!(mine.len(), theirs.len(), "gradient shape mismatch");
        mine.into_iter()
            .zip(theirs)
            .map(|(x, y)| S::deviation(x, y))
            .fold(S::zero(), S::max)
    }
}

impl<S: Scalar> Network<S> {
    /// Gradient of the loss over `data` with respect to every weight and
    /// bias, computed by reverse accumulation.
    ///
    /// Samples are processed in dataset order and sums run over ascending
    /// indices, so the result is bitwise reproducible.
    pub fn backprop(&self, data: &Dataset<S>, kind: LossKind) -> Result<GradientSet<S>> {
        let LossKind::MeanSquaredError = kind;
        self.check_structure()?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        data.check_against(self)?;
        let depth = self.depth();
        let mut grads = GradientSet::zeros_like(self);
        // d loss / d a_out = 2 (a - t) / (N * n_out); the factor is
        // constant, so fold it into the output delta once.
        let scale =
            S::from_count(2) / (S::from_count(data.len()) * S::from_count(self.output_dim()));
        for (input, target) in &data.samples {
            let acts = self.forward(input)?;
            let out = &acts[depth - 1];
            let mut delta: Vec<S> = out
                .iter()
                .zip(target)
                .map(|(&a, &t)| scale * (a - t) * self.output_activation.derivative_from_output(a))
                .collect();
            for idx in (0..depth).rev() {
                let prev_act: &[S] = if idx == 0 { input } else { &acts[idx - 1] };
                let grad_layer = &mut grads.layers[idx];
                for (i, &d) in delta.iter().enumerate() {
                    for (j, &a) in prev_act.iter().enumerate() {
                        let g = grad_layer.weights.get(i, j) + d * a;
                        grad_layer.weights.set(i, j, g);
                    }
                }
                if let Some(gb) = &mut grad_layer.bias {
                    for (gbi, &d) in gb.iter_mut().zip(&delta) {
                        *gbi = *gbi + d;
                    }
                }
                if idx > 0 {
                    let w = &self.layers[idx].weights;
                    let mut prev_delta = vec![S::zero(); w.cols()];
                    for (j, slot) in prev_delta.iter_mut().enumerate() {
                        let mut s = S::zero();
                        for (i, &d) in delta.iter().enumerate() {
                            s = s + d * w.get(i, j);
                        }
                        *slot = s * self.hidden_activation.derivative_from_output(prev_act[j]);
                    }
                    delta = prev_delta;
                }
            }
        }
        Ok(grads)
    }

    /// Central-difference approximation of the same gradient: each
    /// parameter is nudged by ±`eps` and the loss difference divided by
    /// `2·eps`. Slow but independent of the reverse-accumulation code,
    /// which makes it a useful cross-check.
    pub fn finite_diff(&self, data: &Dataset<S>, kind: LossKind, eps: S) -> Result<GradientSet<S>> {
        let LossKind::MeanSquaredError = kind;
        self.check_structure()?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        data.check_against(self)?;
        if !(eps.is_finite() && eps > S::zero()) {
            return Err(Error::InvalidTrainConfig {
                reason: "finite-difference step must be positive and finite".into(),
            });
        }
        let mut grads = GradientSet::zeros_like(self);
        let count = self.param_count();
        let mut flat = Vec::with_capacity(count);
        for k in 0..count {
            let mut plus = self.clone();
            let mut minus = self.clone();
            {
                let p = plus.params_mut().nth(k).expect("k < param_count");
                *p = *p + eps;
            }
            {
                let m = minus.params_mut().nth(k).expect("k < param_count");
                *m = *m - eps;
            }
            let up = plus.loss(data, LossKind::MeanSquaredError)?;
            let down = minus.loss(data, LossKind::MeanSquaredError)?;
            flat.push((up - down) / (S::from_count(2) * eps));
        }
        for (slot, value) in grads.params_mut().zip(flat) {
            *slot = value;
        }
        Ok(grads)
    }
}

/// Hyperparameters for [`sgd_train`].
///
/// `seed` reproduces any randomness a caller attaches to the run (such
/// as drawing the relabelling for an equivariance experiment); the
/// descent itself is full-batch and consumes none.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig<S> {
    pub learning_rate: S,
    pub steps: usize,
    pub seed: u64,
    pub loss: LossKind,
}

impl<S: Scalar> TrainConfig<S> {
    pub fn new(learning_rate: S, steps: usize) -> Self {
        TrainConfig {
            learning_rate,
            steps,
            seed: 0,
            loss: LossKind::MeanSquaredError,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > S::zero()) {
            return Err(Error::InvalidTrainConfig {
                reason: "learning rate must be positive and finite".into(),
            });
        }
        if self.steps == 0 {
            return Err(Error::InvalidTrainConfig {
                reason: "step count must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Full-batch gradient descent: every step updates all parameters with
/// the exact gradient over the whole dataset.
///
/// Returns the network after every step, starting with the unmodified
/// input, so the trajectory has `steps + 1` entries. A step producing a
/// non-finite parameter aborts with [`Error::Diverged`].
pub fn sgd_train<S: Scalar>(
    net: &Network<S>,
    data: &Dataset<S>,
    config: &TrainConfig<S>,
) -> Result<Vec<Network<S>>> {
    config.validate()?;
    let mut trajectory = Vec::with_capacity(config.steps + 1);
    let mut current = net.clone();
    trajectory.push(current.clone());
    for step in 1..=config.steps {
        let grads = current.backprop(data, config.loss)?;
        for (p, g) in current.params_mut().zip(grads.params()) {
            *p = *p - config.learning_rate * g;
        }
        if current.params().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
        trajectory.push(current.clone());
    }
    Ok(trajectory)
}

/// Measured symmetry of gradients and training runs under one
/// relabelling.
#[derive(Clone, Copy, Debug)]
pub struct EquivarianceReport<S> {
    /// Deviation between the relabelled gradient of the network and the
    /// gradient of the relabelled network, at the starting weights.
    pub max_gradient_deviation: S,
    /// Worst deviation across the two descent trajectories, comparing
    /// the relabelled original against the relabelled-then-trained
    /// network at every step.
    pub max_trajectory_deviation: S,
    /// Number of trajectory points compared (`steps + 1`).
    pub steps_compared: usize,
}

/// Measures how far training breaks the relabelling symmetry: compares
/// `p` applied to the gradient of `net` against the gradient of
/// `p(net)`, then trains both networks side by side and compares `p`
/// applied to each point of the original trajectory against the
/// sibling's trajectory.
///
/// Both deviations would be exactly zero in real arithmetic; in floating
/// point they stay at rounding size because permuted sums associate
/// differently. The identity permutation gives exact zeros, since the
/// two runs are then the same computation.
pub fn equivariance_experiment<S: Scalar>(
    net: &Network<S>,
    p: &NetworkPermutation,
    data: &Dataset<S>,
    config: &TrainConfig<S>,
) -> Result<EquivarianceReport<S>> {
    config.validate()?;
    let sibling = net.apply_permutation(p)?;

    let grad = net.backprop(data, config.loss)?;
    let grad_sibling = sibling.backprop(data, config.loss)?;
    let max_gradient_deviation = grad.apply_permutation(p)?.max_deviation(&grad_sibling);

    let trajectory = sgd_train(net, data, config)?;
    let trajectory_sibling = sgd_train(&sibling, data, config)?;
    let mut max_trajectory_deviation = S::zero();
    for (original, sib) in trajectory.iter().zip(&trajectory_sibling) {
        let relabelled = original.apply_permutation(p)?;
        max_trajectory_deviation =
            max_trajectory_deviation.max(max_param_deviation(&relabelled, sib));
    }

    Ok(EquivarianceReport {
        max_gradient_deviation,
        max_trajectory_deviation,
        steps_compared: trajectory.len(),
    })
}
