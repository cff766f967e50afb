//! Command-line surface for the neuron-permutation symmetry toolkit.
//!
//! Eight subcommands cover the library end to end: `count` the
//! relabellings of a hidden architecture, `permute`/`switch` weights,
//! `canon`icalize to the orbit representative, decide `equiv`alence,
//! `verify` prediction and loss invariance on random inputs, and run
//! `train`/`equivariance` descent experiments on CSV data.
//!
//! The exit code is the machine-readable verdict, stable across all
//! subcommands: 0 for success (or "yes"), 1 for a check that ran and
//! answered "no" (not equivalent, invariance violated, tolerance
//! exceeded, run diverged), 2 for unusable input — bad flags,
//! unreadable or malformed files, shape mismatches.

pub mod formats;

use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use permsym::{
    equivalent, orbit_size, sgd_train, Dataset64, EquivalenceMode, Error, LossKind, Network64,
    NetworkPermutation, Scalar, TrainConfig, DEFAULT_TOL,
};

use formats::{
    load_csv, load_model, load_perm, save_model, save_perm, to_json_string, write_json, CliError,
    CountReport, EquivReport, EquivarianceRunReport, PermFile, Result, TrainReport, VerifyReport,
};

#[derive(Parser)]
#[command(
    name = "permsym",
    version,
    about = "Neuron-permutation symmetry of dense feed-forward networks",
    max_term_width = 80
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Compare canonical orbit representatives (fast, tie-aware)
    Canonical,
    /// Enumerate relabellings outright (small layers only)
    BruteForce,
}

impl ModeArg {
    fn to_mode(self) -> EquivalenceMode {
        match self {
            ModeArg::Canonical => EquivalenceMode::Canonical,
            ModeArg::BruteForce => EquivalenceMode::BruteForce,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ModeArg::Canonical => "canonical",
            ModeArg::BruteForce => "brute-force",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Count the weight relabellings of a hidden architecture
    Count {
        /// Hidden layer widths, comma separated (e.g. 128,128,128)
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        /// Also write the count as a JSON report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relabel hidden neurons of a model with a permutation
    #[command(group(ArgGroup::new("source").required(true).args(["perm", "seed"])))]
    Permute {
        /// Model JSON file
        model: PathBuf,
        /// Permutation JSON file to apply
        #[arg(long)]
        perm: Option<PathBuf>,
        /// Draw a uniformly random permutation from this seed instead
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the permuted model JSON
        #[arg(long)]
        out: PathBuf,
        /// Where to write the drawn permutation JSON (defaults to stdout
        /// when drawing from --seed)
        #[arg(long)]
        perm_out: Option<PathBuf>,
    },
    /// Exchange two neurons of one hidden layer
    Switch {
        /// Model JSON file
        model: PathBuf,
        /// One-based hidden layer index
        #[arg(long)]
        layer: usize,
        /// One-based index of the first neuron
        #[arg(short, long)]
        i: usize,
        /// One-based index of the second neuron
        #[arg(short, long)]
        j: usize,
        /// Where to write the switched model JSON
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace a model by its canonical orbit representative
    Canon {
        /// Model JSON file
        model: PathBuf,
        /// Where to write the canonical model JSON
        #[arg(long)]
        out: PathBuf,
        /// Where to write the canonicalizing permutation JSON (defaults
        /// to stdout)
        #[arg(long)]
        perm_out: Option<PathBuf>,
    },
    /// Decide whether two models are relabellings of each other
    Equiv {
        /// First model JSON file
        a: PathBuf,
        /// Second model JSON file
        b: PathBuf,
        /// Largest accepted per-parameter deviation
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Decision procedure
        #[arg(long, value_enum, default_value_t = ModeArg::Canonical)]
        mode: ModeArg,
        /// Also write the verdict as a JSON report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check prediction and loss invariance under a random relabelling
    Verify {
        /// Model JSON file
        model: PathBuf,
        /// Number of random inputs to evaluate
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Seed for the permutation and the inputs
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest accepted deviation
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Corrupt the relabelled network first (negative-control hook)
        #[arg(long, hide = true)]
        inject_fault: bool,
        /// Also write the outcome as a JSON report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run full-batch gradient descent on a CSV dataset
    Train {
        /// Model JSON file
        model: PathBuf,
        /// CSV dataset: per line, input columns then target columns
        data: PathBuf,
        /// Step size of the descent
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        /// Number of descent steps
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Also write the loss trajectory as a JSON report
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the trained model JSON
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Measure gradient and trajectory deviations under a relabelling
    #[command(group(ArgGroup::new("source").args(["perm", "seed"])))]
    Equivariance {
        /// Model JSON file
        model: PathBuf,
        /// CSV dataset: per line, input columns then target columns
        data: PathBuf,
        /// Permutation JSON file to apply
        #[arg(long)]
        perm: Option<PathBuf>,
        /// Draw the permutation from this seed instead
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step size of the descent
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        /// Number of descent steps
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Largest accepted single-step gradient deviation
        #[arg(long, default_value_t = 1e-9)]
        grad_tol: f64,
        /// Largest accepted whole-trajectory deviation
        #[arg(long, default_value_t = 1e-6)]
        traj_tol: f64,
        /// Also write the outcome as a JSON report
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse the process arguments, run the selected subcommand, and
/// return the exit code to terminate with.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders help/version on stdout (exit 0) and real
            // usage errors on stderr (exit 2).
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Count { widths, out } => cmd_count(&widths, out.as_deref()),
        Command::Permute {
            model,
            perm,
            seed,
            out,
            perm_out,
        } => cmd_permute(&model, perm.as_deref(), seed, &out, perm_out.as_deref()),
        Command::Switch {
            model,
            layer,
            i,
            j,
            out,
        } => cmd_switch(&model, layer, i, j, &out),
        Command::Canon {
            model,
            out,
            perm_out,
        } => cmd_canon(&model, &out, perm_out.as_deref()),
        Command::Equiv {
            a,
            b,
            tol,
            mode,
            out,
        } => cmd_equiv(&a, &b, tol, mode, out.as_deref()),
        Command::Verify {
            model,
            samples,
            seed,
            tol,
            inject_fault,
            out,
        } => cmd_verify(&model, samples, seed, tol, inject_fault, out.as_deref()),
        Command::Train {
            model,
            data,
            learning_rate,
            steps,
            out,
            model_out,
        } => cmd_train(
            &model,
            &data,
            learning_rate,
            steps,
            out.as_deref(),
            model_out.as_deref(),
        ),
        Command::Equivariance {
            model,
            data,
            perm,
            seed,
            learning_rate,
            steps,
            grad_tol,
            traj_tol,
            out,
        } => cmd_equivariance(
            &model,
            &data,
            perm.as_deref(),
            seed,
            learning_rate,
            steps,
            grad_tol,
            traj_tol,
            out.as_deref(),
        ),
    }
}

fn cmd_count(widths: &[usize], out: Option<&Path>) -> Result<i32> {
    let count = orbit_size(widths)?;
    let report = CountReport::from_count(&count);
    println!("exact: {}", report.exact);
    println!("digits: {}", report.digits);
    println!("log10: {}", report.log10);
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    Ok(0)
}

/// Resolve the permutation for a command that accepts either a
/// permutation file or a seed to draw one from.
fn permutation_from(
    net: &Network64,
    perm: Option<&Path>,
    seed: Option<u64>,
) -> Result<(NetworkPermutation, bool)> {
    match (perm, seed) {
        (Some(path), _) => Ok((load_perm(path)?, false)),
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((
                NetworkPermutation::random(&net.hidden_widths(), &mut rng),
                true,
            ))
        }
        (None, None) => unreachable!("clap requires one of --perm/--seed"),
    }
}

fn cmd_permute(
    model: &Path,
    perm: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    perm_out: Option<&Path>,
) -> Result<i32> {
    let net = load_model(model)?;
    let (p, drawn) = permutation_from(&net, perm, seed)?;
    let permuted = net.apply_permutation(&p)?;
    save_model(out, &permuted)?;
    if let Some(path) = perm_out {
        save_perm(path, &p)?;
    } else if drawn {
        print!("{}", to_json_string(&PermFile::from_permutation(&p)));
    }
    Ok(0)
}

fn cmd_switch(model: &Path, layer: usize, i: usize, j: usize, out: &Path) -> Result<i32> {
    let net = load_model(model)?;
    let switched = net.neuron_switch(layer, i, j)?;
    save_model(out, &switched)?;
    Ok(0)
}

fn cmd_canon(model: &Path, out: &Path, perm_out: Option<&Path>) -> Result<i32> {
    let net = load_model(model)?;
    let (canon, p) = net.canonicalize()?;
    save_model(out, &canon)?;
    if let Some(path) = perm_out {
        save_perm(path, &p)?;
    } else {
        print!("{}", to_json_string(&PermFile::from_permutation(&p)));
    }
    Ok(0)
}

fn cmd_equiv(a: &Path, b: &Path, tol: f64, mode: ModeArg, out: Option<&Path>) -> Result<i32> {
    let net_a = load_model(a)?;
    let net_b = load_model(b)?;
    let verdict = equivalent(&net_a, &net_b, tol, mode.to_mode())?;
    let report = EquivReport::from_verdict(&verdict, tol, mode.label());
    if verdict.equivalent {
        println!("equivalent (max deviation {:e})", verdict.max_deviation);
    } else {
        println!(
            "not equivalent (best deviation {:e} exceeds tolerance {tol:e})",
            verdict.max_deviation
        );
    }
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    Ok(if verdict.equivalent { 0 } else { 1 })
}

fn cmd_verify(
    model: &Path,
    samples: usize,
    seed: u64,
    tol: f64,
    inject_fault: bool,
    out: Option<&Path>,
) -> Result<i32> {
    if samples == 0 {
        return Err(CliError::Invalid {
            path: model.display().to_string(),
            reason: "--samples must be at least 1".to_string(),
        });
    }
    let net = load_model(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = NetworkPermutation::random(&net.hidden_widths(), &mut rng);
    let mut sibling = net.apply_permutation(&p)?;
    if inject_fault {
        let bumped = sibling.layers[0].weights.get(0, 0) + 1.0;
        sibling.layers[0].weights.set(0, 0, bumped);
    }

    let mut draw =
        |dim: usize| -> Vec<f64> { (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let data = Dataset64::new(
        (0..samples)
            .map(|_| (draw(net.input_dim()), draw(net.output_dim())))
            .collect(),
    );

    let mut max_prediction_deviation: f64 = 0.0;
    for (input, _) in &data.samples {
        let base = net.predict(input)?;
        let other = sibling.predict(input)?;
        for (&x, &y) in base.iter().zip(other.iter()) {
            max_prediction_deviation = max_prediction_deviation.max(f64::deviation(x, y));
        }
    }
    let loss_base = net.loss(&data, LossKind::MeanSquaredError)?;
    let loss_other = sibling.loss(&data, LossKind::MeanSquaredError)?;
    let max_loss_deviation = f64::deviation(loss_base, loss_other);

    let passed = max_prediction_deviation <= tol && max_loss_deviation <= tol;
    let report = VerifyReport {
        passed,
        samples,
        seed,
        tolerance: tol,
        max_prediction_deviation,
        max_loss_deviation,
        permutation: PermFile::from_permutation(&p),
    };
    println!(
        "{}: prediction deviation {:e}, loss deviation {:e} over {samples} samples",
        if passed { "pass" } else { "fail" },
        max_prediction_deviation,
        max_loss_deviation
    );
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    Ok(if passed { 0 } else { 1 })
}

fn cmd_train(
    model: &Path,
    data: &Path,
    learning_rate: f64,
    steps: usize,
    out: Option<&Path>,
    model_out: Option<&Path>,
) -> Result<i32> {
    let net = load_model(model)?;
    let dataset = load_csv(data, net.input_dim(), net.output_dim())?;
    let config = TrainConfig::new(learning_rate, steps);
    config.validate()?;
    let trajectory = match sgd_train(&net, &dataset, &config) {
        Ok(trajectory) => trajectory,
        Err(Error::Diverged { step }) => {
            eprintln!("diverged: non-finite weights after step {step}");
            return Ok(1);
        }
        Err(err) => return Err(err.into()),
    };
    let losses = trajectory
        .iter()
        .map(|snapshot| snapshot.loss(&dataset, LossKind::MeanSquaredError))
        .collect::<permsym::Result<Vec<f64>>>()?;
    let report = TrainReport {
        steps,
        learning_rate,
        initial_loss: losses[0],
        final_loss: *losses.last().expect("trajectory is never empty"),
        losses,
    };
    println!(
        "loss {:e} -> {:e} over {steps} steps",
        report.initial_loss, report.final_loss
    );
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    if let Some(path) = model_out {
        save_model(path, trajectory.last().expect("trajectory is never empty"))?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_equivariance(
    model: &Path,
    data: &Path,
    perm: Option<&Path>,
    seed: u64,
    learning_rate: f64,
    steps: usize,
    grad_tol: f64,
    traj_tol: f64,
    out: Option<&Path>,
) -> Result<i32> {
    let net = load_model(model)?;
    let dataset = load_csv(data, net.input_dim(), net.output_dim())?;
    let (p, _) = permutation_from(&net, perm, Some(seed))?;
    let config = TrainConfig::new(learning_rate, steps);
    config.validate()?;
    let outcome = permsym::equivariance_experiment(&net, &p, &dataset, &config)?;
    let passed =
        outcome.max_gradient_deviation <= grad_tol && outcome.max_trajectory_deviation <= traj_tol;
    let report = EquivarianceRunReport {
        passed,
        steps_compared: outcome.steps_compared,
        learning_rate,
        max_gradient_deviation: outcome.max_gradient_deviation,
        gradient_tolerance: grad_tol,
        max_trajectory_deviation: outcome.max_trajectory_deviation,
        trajectory_tolerance: traj_tol,
        permutation: PermFile::from_permutation(&p),
    };
    println!(
        "gradient deviation {:e} (tolerance {grad_tol:e})",
        outcome.max_gradient_deviation
    );
    println!(
        "trajectory deviation {:e} over {} states (tolerance {traj_tol:e})",
        outcome.max_trajectory_deviation, outcome.steps_compared
    );
    println!("{}", if passed { "pass" } else { "fail" });
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    Ok(if passed { 0 } else { 1 })
}
