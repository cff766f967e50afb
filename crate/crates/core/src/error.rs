//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Rejected inputs and failure conditions surfaced by the library.
///
/// Layer and neuron indices in messages are one-based, matching the
/// user-facing convention of the file formats.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("network has no layers")]
    EmptyNetwork,

    #[error("matrix row {row} has {got} entries, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("layer {layer} expects an input of length {expected}, got {got}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },

    #[error("layer {layer} bias has {got} entries, expected {expected}")]
    BiasShape {
        layer: usize,
        expected: usize,
        got: usize,
    },

    #[error(
        "sample {index}: input length {got_in} (expected {expected_in}), \
         target length {got_out} (expected {expected_out})"
    )]
    SampleShape {
        index: usize,
        expected_in: usize,
        got_in: usize,
        expected_out: usize,
        got_out: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("layer {layer} is not a hidden layer (hidden layers are 1..={hidden})")]
    NotHiddenLayer { layer: usize, hidden: usize },

    #[error("neuron index {index} out of range for layer {layer} of width {width}")]
    NeuronOutOfRange {
        layer: usize,
        index: usize,
        width: usize,
    },

    #[error("images {images:?} do not form a permutation of {len} indices")]
    NotABijection { images: Vec<usize>, len: usize },

    #[error("permutation widths {got:?} do not match expected widths {expected:?}")]
    PermutationShape {
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("hidden width list is empty")]
    EmptyWidths,

    #[error("hidden widths must be at least 1")]
    ZeroWidth,

    #[error("non-finite entry in layer {layer}")]
    NonFinite { layer: usize },

    #[error("architecture mismatch: {left:?} vs {right:?}")]
    ArchitectureMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("activation mismatch between networks")]
    ActivationMismatch,

    #[error("layer {layer}: bias present in only one of the networks")]
    BiasPatternMismatch { layer: usize },

    #[error("exhaustive search over {size} permutations exceeds the budget of {budget}")]
    BruteForceBudget { size: String, budget: u64 },

    #[error("training diverged at step {step}: non-finite weight")]
    Diverged { step: usize },

    #[error("invalid training config: {reason}")]
    InvalidTrainConfig { reason: String },
}
