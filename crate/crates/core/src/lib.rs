//! Neuron-permutation symmetry of dense feed-forward networks.
//!
//! Relabelling the neurons inside a hidden layer — together with the
//! matching rows, bias entries and next-layer columns — produces a
//! different weight configuration that computes exactly the same
//! function. This crate makes that symmetry concrete:
//!
//! - [`Network::neuron_switch`] swaps two hidden neurons; the general
//!   relabelling is [`Network::apply_permutation`] with a
//!   [`NetworkPermutation`].
//! - [`orbit_size`] counts the relabellings — the product of the hidden
//!   widths' factorials — exactly and in log10.
//! - [`Network::canonicalize`] maps every member of an orbit to one
//!   deterministic representative, and [`equivalent`] decides whether
//!   two networks are relabellings of each other, producing a witness
//!   permutation when they are.
//! - [`Network::backprop`] (cross-checked by [`Network::finite_diff`]),
//!   [`sgd_train`] and [`equivariance_experiment`] show the symmetry
//!   extends to gradients and whole training runs.
//!
//! Everything is generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the `*64` aliases below fix the common choice.
//! Evaluation, gradients and training accumulate in fixed index order,
//! so results are bitwise reproducible run to run.
//!
//! ```
//! use permsym::{Activation, LayerWeights, Network64};
//!
//! let net = Network64::new(
//!     vec![
//!         LayerWeights::from_rows(vec![vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap(),
//!         LayerWeights::from_rows(vec![vec![0.5, 0.25]]).unwrap(),
//!     ],
//!     Activation::Relu,
//!     Activation::Identity,
//! );
//! let switched = net.neuron_switch(1, 1, 2).unwrap();
//! assert_eq!(net.predict(&[1.0, 1.0]).unwrap(), switched.predict(&[1.0, 1.0]).unwrap());
//! ```

mod error;
mod matrix;
mod network;
mod perm;
mod scalar;
mod symmetry;
mod training;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use network::{
    max_param_deviation, Activation, Dataset, LayerWeights, LossKind, Network, ValidationReport,
    Violation,
};
pub use perm::{LayerPermutation, NetworkPermutation};
pub use scalar::Scalar;
pub use symmetry::{equivalent, orbit_size, EquivalenceMode, EquivalenceVerdict, OrbitCount};
pub use training::{
    equivariance_experiment, sgd_train, EquivarianceReport, GradientSet, TrainConfig,
};

/// Default tolerance for equivalence checks and deviation assertions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Upper bound on the number of candidate permutations an exhaustive
/// equivalence search may examine.
pub const BRUTE_FORCE_BUDGET: u64 = 1_000_000;

/// Double-precision network, the common concrete choice.
pub type Network64 = Network<f64>;
/// Single-precision network.
pub type Network32 = Network<f32>;
/// Double-precision dataset.
pub type Dataset64 = Dataset<f64>;
/// Double-precision gradient set.
pub type GradientSet64 = GradientSet<f64>;
/// Double-precision equivalence verdict.
pub type EquivalenceVerdict64 = EquivalenceVerdict<f64>;
/// Double-precision training configuration.
pub type TrainConfig64 = TrainConfig<f64>;
