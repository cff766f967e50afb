//! File formats: model and permutation JSON, dataset CSV, report JSON.
//!
//! Models serialize through [`ModelFile`], a plain JSON document with
//! one entry per layer. Numbers are written in shortest-round-trip
//! form, so `parse(serialize(net))` is bitwise-identical to `net` for
//! every finite double. Permutations use one-based neuron indices in
//! files, matching the rest of the user-facing surface.
//!
//! Every loader wraps its failure in [`CliError`] with the offending
//! path (and, for CSV, the line number), because a batch tool's error
//! messages are its debugger.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use permsym::{
    Activation, Dataset64, EquivalenceVerdict64, LayerPermutation, LayerWeights, Network64,
    NetworkPermutation, OrbitCount,
};

/// Any failure that should terminate the process with exit code 2:
/// unreadable files, malformed JSON or CSV, and inputs that violate the
/// network or permutation invariants.
#[derive(Debug)]
pub enum CliError {
    /// I/O failure reading or writing `path`.
    Io {
        path: String,
        source: std::io::Error,
    },
    /// JSON syntax or schema error in `path` (includes line/column).
    Json {
        path: String,
        source: serde_json::Error,
    },
    /// Structurally invalid model, permutation, or dataset in `path`.
    Invalid { path: String, reason: String },
    /// One CSV line could not be parsed as a sample.
    Csv {
        path: String,
        line: usize,
        reason: String,
    },
    /// A library operation rejected the inputs.
    Lib(permsym::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Json { path, source } => write!(f, "{path}: {source}"),
            CliError::Invalid { path, reason } => write!(f, "{path}: {reason}"),
            CliError::Csv { path, line, reason } => write!(f, "{path}: line {line}: {reason}"),
            CliError::Lib(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<permsym::Error> for CliError {
    fn from(err: permsym::Error) -> Self {
        CliError::Lib(err)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<'a, T: Deserialize<'a>>(path: &Path, text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Serialize any report or file document as pretty JSON with a trailing
/// newline, ready to write or print.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization is infallible");
    text.push('\n');
    text
}

/// Write `value` as pretty JSON to `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &to_json_string(value))
}

/// On-disk network description: activations by name plus one weights
/// (+ optional bias) block per layer, row-major, one row per neuron.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub hidden_activation: String,
    pub output_activation: String,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerFile {
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn from_network(net: &Network64) -> Self {
        ModelFile {
            hidden_activation: net.hidden_activation.name().to_string(),
            output_activation: net.output_activation.name().to_string(),
            layers: net
                .layers
                .iter()
                .map(|layer| LayerFile {
                    weights: layer.weights.to_rows(),
                    bias: layer.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn into_network(self, path: &Path) -> Result<Network64> {
        let invalid = |reason: String| CliError::Invalid {
            path: path.display().to_string(),
            reason,
        };
        let hidden_activation = Activation::from_str(&self.hidden_activation)
            .map_err(|e| invalid(format!("hidden_activation: {e}")))?;
        let output_activation = Activation::from_str(&self.output_activation)
            .map_err(|e| invalid(format!("output_activation: {e}")))?;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.into_iter().enumerate() {
            let built = match layer.bias {
                Some(bias) => LayerWeights::with_bias(layer.weights, bias),
                None => LayerWeights::from_rows(layer.weights),
            }
            .map_err(|e| invalid(format!("layers[{idx}]: {e}")))?;
            layers.push(built);
        }
        let net = Network64::new(layers, hidden_activation, output_activation);
        let report = net.validate();
        if let Some(violation) = report.violations.first() {
            return Err(invalid(violation.to_string()));
        }
        Ok(net)
    }
}

pub fn load_model(path: &Path) -> Result<Network64> {
    let text = read_file(path)?;
    let file: ModelFile = parse_json(path, &text)?;
    file.into_network(path)
}

pub fn save_model(path: &Path, net: &Network64) -> Result<()> {
    write_json(path, &ModelFile::from_network(net))
}

/// On-disk permutation: one array of one-based images per hidden layer.
/// `per_layer[l][i]` is the new (one-based) index of neuron `i + 1`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PermFile {
    pub per_layer: Vec<Vec<usize>>,
}

impl PermFile {
    pub fn from_permutation(p: &NetworkPermutation) -> Self {
        PermFile {
            per_layer: p.per_layer().iter().map(|l| l.one_based()).collect(),
        }
    }

    pub fn into_permutation(self, path: &Path) -> Result<NetworkPermutation> {
        let mut per_layer = Vec::with_capacity(self.per_layer.len());
        for (idx, images) in self.per_layer.iter().enumerate() {
            let layer =
                LayerPermutation::from_one_based(images).map_err(|e| CliError::Invalid {
                    path: path.display().to_string(),
                    reason: format!("per_layer[{idx}]: {e}"),
                })?;
            per_layer.push(layer);
        }
        Ok(NetworkPermutation::new(per_layer))
    }
}

pub fn load_perm(path: &Path) -> Result<NetworkPermutation> {
    let text = read_file(path)?;
    let file: PermFile = parse_json(path, &text)?;
    file.into_permutation(path)
}

pub fn save_perm(path: &Path, p: &NetworkPermutation) -> Result<()> {
    write_json(path, &PermFile::from_permutation(p))
}

/// Load a CSV dataset: one sample per line, `n_in` input columns
/// followed by `n_out` target columns. Blank lines are skipped; any
/// other irregularity reports its one-based line number.
pub fn load_csv(path: &Path, n_in: usize, n_out: usize) -> Result<Dataset64> {
    let text = read_file(path)?;
    let csv_err = |line: usize, reason: String| CliError::Csv {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut samples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n_in + n_out {
            return Err(csv_err(
                line_no,
                format!(
                    "expected {} columns ({n_in} inputs + {n_out} targets), got {}",
                    n_in + n_out,
                    fields.len()
                ),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for field in &fields {
            let value: f64 = field
                .parse()
                .map_err(|_| csv_err(line_no, format!("cannot parse {field:?} as a number")))?;
            if !value.is_finite() {
                return Err(csv_err(line_no, format!("non-finite value {field:?}")));
            }
            values.push(value);
        }
        let targets = values.split_off(n_in);
        samples.push((values, targets));
    }
    if samples.is_empty() {
        return Err(CliError::Invalid {
            path: path.display().to_string(),
            reason: "dataset contains no samples".to_string(),
        });
    }
    Ok(Dataset64::new(samples))
}

/// Report emitted by `count`: the exact orbit size as a decimal string
/// (it routinely exceeds any float's range), its digit count, and
/// log10.
#[derive(Debug, Serialize, Deserialize)]
pub struct CountReport {
    pub exact: String,
    pub digits: usize,
    pub log10: f64,
}

impl CountReport {
    pub fn from_count(count: &OrbitCount) -> Self {
        CountReport {
            exact: count.exact.to_string(),
            digits: count.digits(),
            log10: count.log10,
        }
    }
}

/// Report emitted by `equiv`: the verdict, the deviation of the best
/// candidate relabelling, and the witness permutation when one exists.
#[derive(Debug, Serialize, Deserialize)]
pub struct EquivReport {
    pub equivalent: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub mode: String,
    pub key_ties: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<PermFile>,
}

impl EquivReport {
    pub fn from_verdict(verdict: &EquivalenceVerdict64, tol: f64, mode: &str) -> Self {
        EquivReport {
            equivalent: verdict.equivalent,
            max_deviation: verdict.max_deviation,
            tolerance: tol,
            mode: mode.to_string(),
            key_ties: verdict.key_ties,
            witness: verdict.witness.as_ref().map(PermFile::from_permutation),
        }
    }
}

/// Report emitted by `verify`: invariance deviations across random
/// inputs under one random relabelling.
#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_prediction_deviation: f64,
    pub max_loss_deviation: f64,
    pub permutation: PermFile,
}

/// Report emitted by `train`: the loss along the descent trajectory.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: usize,
    pub learning_rate: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub losses: Vec<f64>,
}

/// Report emitted by `equivariance`: deviations between the permuted
/// baseline run and the run started from the permuted network.
#[derive(Debug, Serialize, Deserialize)]
pub struct EquivarianceRunReport {
    pub passed: bool,
    pub steps_compared: usize,
    pub learning_rate: f64,
    pub max_gradient_deviation: f64,
    pub gradient_tolerance: f64,
    pub max_trajectory_deviation: f64,
    pub trajectory_tolerance: f64,
    pub permutation: PermFile,
}
