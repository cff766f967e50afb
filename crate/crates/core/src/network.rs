//! Feed-forward network representation and evaluation.
//!
//! A [`Network`] is an ordered stack of dense layers. Row `i` of a layer's
//! weight matrix holds the incoming weights of neuron `i`, so layer `l`
//! maps an activation vector `a` to `f(W a + b)`. Hidden layers share one
//! activation; the output layer has its own (identity for regression).
//!
//! Everything here is a pure function over immutable values: evaluation
//! allocates its result and never mutates the network, so shared networks
//! are safe to use concurrently. Dot products accumulate in ascending
//! column order and losses in ascending sample order, which makes repeated
//! runs bitwise identical.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Elementwise activation function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn eval<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Identity => x,
            Activation::Relu => {
                if x > S::zero() {
                    x
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => S::one() / (S::one() + (-x).exp()),
        }
    }

    /// Derivative with respect to the pre-activation, expressed in terms of
    /// the activation output `a`. The relu subgradient at 0 is 0.
    pub fn derivative_from_output<S: Scalar>(self, a: S) -> S {
        match self {
            Activation::Identity => S::one(),
            Activation::Relu => {
                if a > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => S::one() - a * a,
            Activation::Sigmoid => a * (S::one() - a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub const ALL: [Activation; 4] = [
        Activation::Identity,
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
    ];
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(format!(
                "unknown activation {other:?} (expected identity, relu, tanh or sigmoid)"
            )),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Loss function selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LossKind {
    /// Mean over samples of the mean squared componentwise error.
    #[default]
    MeanSquaredError,
}

/// Weights of one dense layer.
///
/// `weights` has shape `out_dim x in_dim`; the optional bias holds one
/// entry per output neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerWeights<S> {
    pub weights: Matrix<S>,
    pub bias: Option<Vec<S>>,
}

impl<S: Scalar> LayerWeights<S> {
    pub fn new(weights: Matrix<S>, bias: Option<Vec<S>>) -> Self {
        LayerWeights { weights, bias }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        Ok(LayerWeights {
            weights: Matrix::from_rows(rows)?,
            bias: None,
        })
    }

    pub fn with_bias(rows: Vec<Vec<S>>, bias: Vec<S>) -> Result<Self> {
        Ok(LayerWeights {
            weights: Matrix::from_rows(rows)?,
            bias: Some(bias),
        })
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Weights in row-major order, then bias entries.
    pub fn params(&self) -> impl Iterator<Item = S> + '_ {
        self.weights
            .iter()
            .copied()
            .chain(self.bias.iter().flatten().copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut S> {
        self.weights
            .iter_mut()
            .chain(self.bias.iter_mut().flatten())
    }
}

/// One invariant violation found by [`Network::validate`].
///
/// Layer indices are one-based: layer 1 reads the network input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoLayers,
    EmptyLayer {
        layer: usize,
    },
    ShapeChain {
        layer: usize,
        cols: usize,
        prev_rows: usize,
    },
    NonFiniteWeight {
        layer: usize,
        row: usize,
        col: usize,
    },
    NonFiniteBias {
        layer: usize,
        index: usize,
    },
    BiasLength {
        layer: usize,
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLayers => write!(f, "network has no layers"),
            Violation::EmptyLayer { layer } => {
                write!(f, "layer {layer}: weight matrix has an empty dimension")
            }
            Violation::ShapeChain {
                layer,
                cols,
                prev_rows,
            } => write!(
                f,
                "layer {layer}: {cols} columns do not match the {prev_rows} rows of layer {}",
                layer - 1
            ),
            Violation::NonFiniteWeight { layer, row, col } => {
                write!(
                    f,
                    "layer {layer}: non-finite weight at row {row}, column {col}"
                )
            }
            Violation::NonFiniteBias { layer, index } => {
                write!(f, "layer {layer}: non-finite bias entry {index}")
            }
            Violation::BiasLength {
                layer,
                expected,
                got,
            } => write!(
                f,
                "layer {layer}: bias has {got} entries, expected {expected}"
            ),
        }
    }
}

/// Report-style outcome of [`Network::validate`]: empty means valid.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Dense feed-forward network.
///
/// Layers are indexed 1..=L in messages and APIs; hidden layers are
/// 1..=L-1. The architecture vector `(n0, ..., nL)` is derived from the
/// weight shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<S> {
    pub layers: Vec<LayerWeights<S>>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl<S: Scalar> Network<S> {
    pub fn new(
        layers: Vec<LayerWeights<S>>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Self {
        Network {
            layers,
            hidden_activation,
            output_activation,
        }
    }

    /// Number of weight layers L.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, LayerWeights::in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, LayerWeights::out_dim)
    }

    /// `(n0, n1, ..., nL)`.
    pub fn architecture(&self) -> Vec<usize> {
        let mut arch = vec![self.input_dim()];
        arch.extend(self.layers.iter().map(LayerWeights::out_dim));
        arch
    }

    /// Widths of the hidden layers, `(n1, ..., n_{L-1})`. Empty for a
    /// single-layer network.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers
            .iter()
            .take(self.depth().saturating_sub(1))
            .map(LayerWeights::out_dim)
            .collect()
    }

    /// Checks every structural invariant and reports all violations found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.layers.is_empty() {
            violations.push(Violation::NoLayers);
        }
        for (idx, layer) in self.layers.iter().enumerate() {
            let l = idx + 1;
            if layer.out_dim() == 0 || layer.in_dim() == 0 {
                violations.push(Violation::EmptyLayer { layer: l });
            }
            if idx > 0 {
                let prev_rows = self.layers[idx - 1].out_dim();
                if layer.in_dim() != prev_rows {
                    violations.push(Violation::ShapeChain {
                        layer: l,
                        cols: layer.in_dim(),
                        prev_rows,
                    });
                }
            }
            for r in 0..layer.weights.rows() {
                for (c, w) in layer.weights.row(r).iter().enumerate() {
                    if !w.is_finite() {
                        violations.push(Violation::NonFiniteWeight {
                            layer: l,
                            row: r + 1,
                            col: c + 1,
                        });
                    }
                }
            }
            if let Some(bias) = &layer.bias {
                if bias.len() != layer.out_dim() {
                    violations.push(Violation::BiasLength {
                        layer: l,
                        expected: layer.out_dim(),
                        got: bias.len(),
                    });
                }
                for (i, b) in bias.iter().enumerate() {
                    if !b.is_finite() {
                        violations.push(Violation::NonFiniteBias {
                            layer: l,
                            index: i + 1,
                        });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Runs the network on `x` and returns the activation vectors of every
    /// layer, `a(1)..a(L)`.
    pub fn forward(&self, x: &[S]) -> Result<Vec<Vec<S>>> {
        if self.layers.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let depth = self.depth();
        let mut activations: Vec<Vec<S>> = Vec::with_capacity(depth);
        for idx in 0..depth {
            let layer = &self.layers[idx];
            let input: &[S] = if idx == 0 { x } else { &activations[idx - 1] };
            if input.len() != layer.in_dim() {
                return Err(Error::DimensionMismatch {
                    layer: idx + 1,
                    expected: layer.in_dim(),
                    got: input.len(),
                });
            }
            let mut z = layer.weights.matvec(input);
            if let Some(bias) = &layer.bias {
                if bias.len() != layer.out_dim() {
                    return Err(Error::BiasShape {
                        layer: idx + 1,
                        expected: layer.out_dim(),
                        got: bias.len(),
                    });
                }
                for (zi, bi) in z.iter_mut().zip(bias) {
                    *zi = *zi + *bi;
                }
            }
            let act = if idx + 1 == depth {
                self.output_activation
            } else {
                self.hidden_activation
            };
            for zi in z.iter_mut() {
                *zi = act.eval(*zi);
            }
            activations.push(z);
        }
        Ok(activations)
    }

    /// The network function: the output-layer activation vector.
    pub fn predict(&self, x: &[S]) -> Result<Vec<S>> {
        let mut activations = self.forward(x)?;
        Ok(activations.pop().expect("forward returns >= 1 layer"))
    }

    /// Mean over samples of the mean squared componentwise error.
    pub fn loss(&self, data: &Dataset<S>, kind: LossKind) -> Result<S> {
        let LossKind::MeanSquaredError = kind;
        if data.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        data.check_against(self)?;
        let out_dim = self.output_dim();
        let mut total = S::zero();
        for (input, target) in &data.samples {
            let pred = self.predict(input)?;
            let mut sq = S::zero();
            for (p, t) in pred.iter().zip(target) {
                let d = *p - *t;
                sq = sq + d * d;
            }
            total = total + sq / S::from_count(out_dim);
        }
        Ok(total / S::from_count(data.samples.len()))
    }

    /// Structural soundness as a hard error: non-empty, consistent layer
    /// chain, bias lengths matching layer widths. Used by operations that
    /// would otherwise index out of bounds on a malformed network.
    pub(crate) fn check_structure(&self) -> Result<()> {
        check_layer_structure(&self.layers)
    }

    /// Rejects networks containing NaN or infinite parameters, naming the
    /// first offending layer.
    pub(crate) fn check_finite(&self) -> Result<()> {
        for (idx, layer) in self.layers.iter().enumerate() {
            let finite = layer.weights.iter().all(|w| w.is_finite())
                && layer.bias.iter().flatten().all(|b| b.is_finite());
            if !finite {
                return Err(Error::NonFinite { layer: idx + 1 });
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.as_ref().map_or(0, Vec::len))
            .sum()
    }

    /// Every parameter in a fixed order: layers in order, weights row-major,
    /// then the layer's bias.
    pub fn params(&self) -> impl Iterator<Item = S> + '_ {
        self.layers.iter().flat_map(LayerWeights::params)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut S> {
        self.layers.iter_mut().flat_map(LayerWeights::params_mut)
    }
}

/// Rejects an empty stack, shape-chain breaks and bias-length mismatches.
/// Shared between networks and gradient sets, which carry the same layer
/// layout.
pub(crate) fn check_layer_structure<S: Scalar>(layers: &[LayerWeights<S>]) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    for idx in 0..layers.len() {
        let layer = &layers[idx];
        if idx > 0 {
            let expected = layers[idx - 1].out_dim();
            if layer.in_dim() != expected {
                return Err(Error::DimensionMismatch {
                    layer: idx + 1,
                    expected,
                    got: layer.in_dim(),
                });
            }
        }
        if let Some(bias) = &layer.bias {
            if bias.len() != layer.out_dim() {
                return Err(Error::BiasShape {
                    layer: idx + 1,
                    expected: layer.out_dim(),
                    got: bias.len(),
                });
            }
        }
    }
    Ok(())
}

/// Largest deviation between corresponding parameters of two same-shaped
/// networks, using the crate's relative-above-one metric.
///
/// Panics if the parameter counts differ; callers check shapes first.
pub fn max_param_deviation<S: Scalar>(a: &Network<S>, b: &Network<S>) -> S {
    assert_eq!(a.param_count(), b.param_count(), "parameter count mismatch");
    a.params()
        .zip(b.params())
        .map(|(x, y)| S::deviation(x, y))
        .fold(S::zero(), S::max)
}

/// Input/target pairs for loss and training runs.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset<S> {
    pub samples: Vec<(Vec<S>, Vec<S>)>,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(samples: Vec<(Vec<S>, Vec<S>)>) -> Self {
        Dataset { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks that every sample matches the network's input and output
    /// dimensions; the error names the first offending sample.
    pub fn check_against(&self, net: &Network<S>) -> Result<()> {
        let n_in = net.input_dim();
        let n_out = net.output_dim();
        for (index, (input, target)) in self.samples.iter().enumerate() {
            if input.len() != n_in || target.len() != n_out {
                return Err(Error::SampleShape {
                    index: index + 1,
                    expected_in: n_in,
                    got_in: input.len(),
                    expected_out: n_out,
                    got_out: target.len(),
                });
            }
        }
        Ok(())
    }
}
