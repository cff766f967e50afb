//! End-to-end acceptance gate. Each test exercises one headline
//! guarantee at its stated tolerance and runtime bound and prints a
//! single PASS line (visible with `--nocapture`).

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use permsym::{
    equivalent, equivariance_experiment, max_param_deviation, orbit_size, Activation, Dataset64,
    EquivalenceMode, LayerPermutation, LayerWeights, LossKind, Network64, NetworkPermutation,
    Scalar, TrainConfig,
};

fn random_net(arch: &[usize], activation: Activation, rng: &mut ChaCha8Rng) -> Network64 {
    let layers = arch
        .windows(2)
        .map(|w| {
            let rows = (0..w[1])
                .map(|_| (0..w[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let bias = (0..w[1]).map(|_| rng.random_range(-1.0..1.0)).collect();
            LayerWeights::with_bias(rows, bias).unwrap()
        })
        .collect();
    Network64::new(layers, activation, Activation::Identity)
}

fn assert_within(elapsed: Duration, bound: Duration, what: &str) {
    assert!(
        elapsed < bound,
        "{what} took {elapsed:?}, bound is {bound:?}"
    );
}

fn param_bits(net: &Network64) -> Vec<u64> {
    net.params().map(|v| v.to_bits()).collect()
}

#[test]
fn orbit_count_of_three_128_layers() {
    let start = Instant::now();
    let count = orbit_size(&[128, 128, 128]).unwrap();
    let elapsed = start.elapsed();

    let decimal = count.exact.to_string();
    assert_eq!(decimal.len(), 647, "128!^3 has 647 decimal digits");
    assert!(
        count.log10 >= 646.70 && count.log10 <= 646.80,
        "log10 = {}",
        count.log10
    );
    let mantissa: f64 = decimal[..10].parse::<f64>().unwrap() / 1e9;
    assert!(
        (5.6..=5.8).contains(&mantissa),
        "leading mantissa = {mantissa}"
    );
    assert_within(elapsed, Duration::from_millis(100), "orbit count");
    println!(
        "PASS: orbit count for widths 128,128,128 is {mantissa:.4}e646 with 647 digits \
         (log10 {:.4}) in {elapsed:?}",
        count.log10
    );
}

#[test]
fn twelve_relabellings_of_a_2_3_2_1_net() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2321);
    let net = random_net(&[2, 3, 2, 1], Activation::Tanh, &mut rng);

    let perms3: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let perms2: [[usize; 2]; 2] = [[0, 1], [1, 0]];
    let mut orbit = Vec::new();
    for p3 in perms3 {
        for p2 in perms2 {
            let p = NetworkPermutation::new(vec![
                LayerPermutation::from_images(p3.to_vec()).unwrap(),
                LayerPermutation::from_images(p2.to_vec()).unwrap(),
            ]);
            orbit.push(net.apply_permutation(&p).unwrap());
        }
    }
    assert_eq!(orbit.len(), 12);
    assert_eq!(
        orbit_size(&net.hidden_widths()).unwrap().exact,
        12u32.into()
    );

    for i in 0..orbit.len() {
        for j in (i + 1)..orbit.len() {
            assert_ne!(
                param_bits(&orbit[i]),
                param_bits(&orbit[j]),
                "members {i} and {j} share a weight set"
            );
            let verdict =
                equivalent(&orbit[i], &orbit[j], 1e-9, EquivalenceMode::BruteForce).unwrap();
            assert!(verdict.equivalent, "members {i} and {j} not equivalent");
        }
    }

    let mut control = net.clone();
    let bumped = control.layers[0].weights.get(0, 0) + 0.5;
    control.layers[0].weights.set(0, 0, bumped);
    for (i, member) in orbit.iter().enumerate() {
        let verdict = equivalent(member, &control, 1e-9, EquivalenceMode::BruteForce).unwrap();
        assert!(!verdict.equivalent, "member {i} matches the control");
    }

    let elapsed = start.elapsed();
    assert_within(elapsed, Duration::from_secs(1), "orbit enumeration");
    println!(
        "PASS: all 12 relabellings of a 2-3-2-1 net are pairwise distinct, mutually \
         equivalent, and reject a perturbed control in {elapsed:?}"
    );
}

#[test]
fn prediction_and_loss_invariance_on_1000_triples() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut max_dev: f64 = 0.0;
    for case in 0..1000 {
        let activation = Activation::ALL[case % Activation::ALL.len()];
        let depth = rng.random_range(3..=5);
        let arch: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=4)).collect();
        let net = random_net(&arch, activation, &mut rng);
        let p = NetworkPermutation::random(&net.hidden_widths(), &mut rng);
        let sibling = net.apply_permutation(&p).unwrap();

        let input: Vec<f64> = (0..arch[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let target: Vec<f64> = (0..*arch.last().unwrap())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();

        let base = net.predict(&input).unwrap();
        let moved = sibling.predict(&input).unwrap();
        for (&x, &y) in base.iter().zip(moved.iter()) {
            max_dev = max_dev.max(f64::deviation(x, y));
        }

        let data = Dataset64::new(vec![(input, target)]);
        let loss_a = net.loss(&data, LossKind::MeanSquaredError).unwrap();
        let loss_b = sibling.loss(&data, LossKind::MeanSquaredError).unwrap();
        max_dev = max_dev.max(f64::deviation(loss_a, loss_b));
        assert!(
            max_dev <= 1e-9,
            "case {case} ({}, arch {arch:?}): deviation {max_dev}",
            activation.name()
        );
    }
    let elapsed = start.elapsed();
    assert_within(elapsed, Duration::from_secs(10), "invariance sweep");
    println!(
        "PASS: predictions and losses invariant under relabelling on 1000 random triples \
         (worst deviation {max_dev:e}) in {elapsed:?}"
    );
}

#[test]
fn canonicalization_is_sound_on_500_pairs() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for case in 0..500 {
        let activation = Activation::ALL[case % Activation::ALL.len()];
        let depth = rng.random_range(3..=5);
        let arch: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=5)).collect();
        let net = random_net(&arch, activation, &mut rng);
        let p = NetworkPermutation::random(&net.hidden_widths(), &mut rng);
        let moved = net.apply_permutation(&p).unwrap();

        let (canon_a, _) = net.canonicalize().unwrap();
        let (canon_b, _) = moved.canonicalize().unwrap();
        assert_eq!(
            param_bits(&canon_a),
            param_bits(&canon_b),
            "case {case}: canonical forms differ across the orbit"
        );

        let (again, back) = canon_a.canonicalize().unwrap();
        assert_eq!(
            param_bits(&canon_a),
            param_bits(&again),
            "case {case}: canonicalize is not idempotent"
        );
        assert!(back.is_identity());
    }
    let elapsed = start.elapsed();
    assert_within(elapsed, Duration::from_secs(10), "canonicalization sweep");
    println!(
        "PASS: canonical form is orbit-invariant and idempotent, bitwise, on 500 random \
         pairs in {elapsed:?}"
    );
}

#[test]
fn gradients_check_out_and_are_equivariant() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    // Part one: analytic gradients against central differences, every
    // activation, hidden widths up to 5, up to 3 hidden layers.
    for &activation in Activation::ALL.iter() {
        for _ in 0..10 {
            let hidden = rng.random_range(1..=3);
            let mut arch = vec![rng.random_range(1..=5)];
            arch.extend((0..hidden).map(|_| rng.random_range(1..=5)));
            arch.push(rng.random_range(1..=5));
            let net = random_net(&arch, activation, &mut rng);
            let data = Dataset64::new(
                (0..4)
                    .map(|_| {
                        (
                            (0..arch[0]).map(|_| rng.random_range(-1.0..1.0)).collect(),
                            (0..*arch.last().unwrap())
                                .map(|_| rng.random_range(-1.0..1.0))
                                .collect(),
                        )
                    })
                    .collect(),
            );
            let bp = net.backprop(&data, LossKind::MeanSquaredError).unwrap();
            let fd = net
                .finite_diff(&data, LossKind::MeanSquaredError, 1e-6)
                .unwrap();
            let dev = fd.max_deviation(&bp);
            assert!(
                dev <= 1e-5,
                "{} on {arch:?}: finite differences deviate by {dev}",
                activation.name()
            );
        }
    }

    // Part two: gradient equivariance on 200 random cases.
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let activation = Activation::ALL[case % Activation::ALL.len()];
        let depth = rng.random_range(3..=5);
        let arch: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=5)).collect();
        let net = random_net(&arch, activation, &mut rng);
        let p = NetworkPermutation::random(&net.hidden_widths(), &mut rng);
        let sibling = net.apply_permutation(&p).unwrap();
        let data = Dataset64::new(
            (0..3)
                .map(|_| {
                    (
                        (0..arch[0]).map(|_| rng.random_range(-1.0..1.0)).collect(),
                        (0..*arch.last().unwrap())
                            .map(|_| rng.random_range(-1.0..1.0))
                            .collect(),
                    )
                })
                .collect(),
        );
        let grad = net.backprop(&data, LossKind::MeanSquaredError).unwrap();
        let grad_moved = sibling.backprop(&data, LossKind::MeanSquaredError).unwrap();
        let dev = grad
            .apply_permutation(&p)
            .unwrap()
            .max_deviation(&grad_moved);
        worst = worst.max(dev);
        assert!(dev <= 1e-9, "case {case}: gradient deviation {dev}");
    }

    let elapsed = start.elapsed();
    assert_within(elapsed, Duration::from_secs(30), "gradient checks");
    println!(
        "PASS: backprop matches central differences within 1e-5 and gradients are \
         equivariant within 1e-9 on 200 cases (worst {worst:e}) in {elapsed:?}"
    );
}

#[test]
fn trajectories_from_permuted_starts_stay_matched() {
    let start = Instant::now();
    let net = Network64::new(
        vec![
            LayerWeights::with_bias(
                vec![vec![0.5, -0.25], vec![0.75, 0.125], vec![-0.5, 0.375]],
                vec![0.1, -0.2, 0.05],
            )
            .unwrap(),
            LayerWeights::with_bias(vec![vec![0.25, -0.5, 0.75]], vec![0.15]).unwrap(),
        ],
        Activation::Tanh,
        Activation::Identity,
    );
    let data = Dataset64::new(vec![
        (vec![0.0, 0.5], vec![0.25]),
        (vec![1.0, -1.0], vec![-0.5]),
        (vec![-0.5, 1.5], vec![0.75]),
        (vec![2.0, 0.5], vec![0.0]),
        (vec![-1.0, -0.5], vec![-0.25]),
        (vec![0.5, 1.0], vec![0.5]),
        (vec![1.5, -0.5], vec![-0.125]),
        (vec![-2.0, 1.0], vec![0.375]),
    ]);
    let config = TrainConfig::new(0.1, 50);

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = NetworkPermutation::random(&net.hidden_widths(), &mut rng);
    assert!(!p.is_identity(), "fixture permutation must move something");

    // The report aggregates the per-step maximum; recompute one step
    // explicitly to pin the meaning of "matching at every step".
    let report = equivariance_experiment(&net, &p, &data, &config).unwrap();
    assert_eq!(report.steps_compared, 51);
    assert!(
        report.max_trajectory_deviation <= 1e-6,
        "trajectory deviation {}",
        report.max_trajectory_deviation
    );
    let moved_start = net.apply_permutation(&p).unwrap();
    let traj_a = permsym::sgd_train(&net, &data, &config).unwrap();
    let traj_b = permsym::sgd_train(&moved_start, &data, &config).unwrap();
    for (k, (a, b)) in traj_a.iter().zip(traj_b.iter()).enumerate() {
        let dev = max_param_deviation(&a.apply_permutation(&p).unwrap(), b);
        assert!(dev <= 1e-6, "step {k}: deviation {dev}");
    }

    let elapsed = start.elapsed();
    assert_within(elapsed, Duration::from_secs(10), "trajectory comparison");
    println!(
        "PASS: 50-step descent from a relabelled start matches the relabelled baseline \
         within 1e-6 at every step (max {:e}) in {elapsed:?}",
        report.max_trajectory_deviation
    );
}

#[test]
fn group_laws_hold_bitwise_for_1000_permutations() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut nets = Vec::new();
    for _ in 0..20 {
        let depth = rng.random_range(3..=5);
        let arch: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=4)).collect();
        nets.push(random_net(&arch, Activation::Relu, &mut rng));
    }

    for case in 0..1000 {
        let net = &nets[case % nets.len()];
        let widths = net.hidden_widths();
        let id = NetworkPermutation::identity(&widths);
        let p = NetworkPermutation::random(&widths, &mut rng);
        let q = NetworkPermutation::random(&widths, &mut rng);
        let r = NetworkPermutation::random(&widths, &mut rng);

        assert_eq!(p.compose(&id).unwrap(), p);
        assert_eq!(id.compose(&p).unwrap(), p);
        assert_eq!(p.compose(&p.inverse()).unwrap(), id);
        assert_eq!(p.inverse().compose(&p).unwrap(), id);
        assert_eq!(
            p.compose(&q).unwrap().compose(&r).unwrap(),
            p.compose(&q.compose(&r).unwrap()).unwrap()
        );

        // Composition acts on networks in application order, bitwise.
        let one_shot = net.apply_permutation(&p.compose(&q).unwrap()).unwrap();
        let two_step = net
            .apply_permutation(&q)
            .unwrap()
            .apply_permutation(&p)
            .unwrap();
        assert_eq!(param_bits(&one_shot), param_bits(&two_step));

        // A switch undoes itself, and a permutation equals its own
        // switch decomposition.
        if let Some((l, width)) = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| (i + 1, w))
            .find(|&(_, w)| w >= 2)
        {
            let i = rng.random_range(1..=width);
            let mut j = rng.random_range(1..=width);
            while j == i {
                j = rng.random_range(1..=width);
            }
            let once = net.neuron_switch(l, i, j).unwrap();
            let twice = once.neuron_switch(l, i, j).unwrap();
            assert_eq!(param_bits(net), param_bits(&twice));
        }
        let mut rebuilt = net.clone();
        for (l, i, j) in p.transpositions() {
            rebuilt = rebuilt.neuron_switch(l, i, j).unwrap();
        }
        assert_eq!(
            param_bits(&net.apply_permutation(&p).unwrap()),
            param_bits(&rebuilt)
        );
    }
    let elapsed = start.elapsed();
    assert_within(elapsed, Duration::from_secs(5), "group-law sweep");
    println!("PASS: group laws, switch involution, and switch decomposition hold bitwise for 1000 random permutations in {elapsed:?}");
}

#[test]
fn cli_round_trips_and_exit_codes() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let run = |args: &[&str]| -> std::process::Output {
        Command::new(env!("CARGO_BIN_EXE_permsym"))
            .current_dir(root)
            .args(args)
            .output()
            .expect("binary runs")
    };
    let code = |args: &[&str]| run(args).status.code().unwrap();

    let model = r#"{
      "hidden_activation": "sigmoid",
      "output_activation": "identity",
      "layers": [
        {"weights": [[0.3333333333333333, -0.25], [2e-300, -0.0], [1.0000000000000002, 0.5]],
         "bias": [0.1, -0.2, 2.2250738585072014e-308]},
        {"weights": [[0.25, -0.5, 0.75]]}
      ]
    }"#;
    fs::write(root.join("model.json"), model).unwrap();
    fs::write(root.join("id.json"), r#"{"per_layer": [[1, 2, 3]]}"#).unwrap();
    fs::write(root.join("data.csv"), "0.5,-0.5,0.25\n1.0,0.0,-0.5\n").unwrap();
    fs::write(root.join("bad.csv"), "0.5,-0.5,0.25\n1.0\n").unwrap();

    // Bitwise round trip through serialize -> parse -> serialize.
    assert_eq!(
        code(&[
            "permute",
            "model.json",
            "--perm",
            "id.json",
            "--out",
            "rt.json"
        ]),
        0
    );
    let bits = |path: PathBuf| -> Vec<u64> {
        let file: permsym_cli::formats::ModelFile =
            serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        file.layers
            .iter()
            .flat_map(|l| {
                l.weights
                    .iter()
                    .flatten()
                    .chain(l.bias.iter().flatten())
                    .map(|v| v.to_bits())
            })
            .collect()
    };
    assert_eq!(
        bits(root.join("model.json")),
        bits(root.join("rt.json")),
        "identity round trip must be bitwise lossless"
    );

    // Exit code 0: successful commands and positive verdicts.
    assert_eq!(code(&["count", "--widths", "3,2"]), 0);
    assert_eq!(
        code(&["permute", "model.json", "--seed", "4", "--out", "sib.json"]),
        0
    );
    assert_eq!(code(&["equiv", "model.json", "sib.json"]), 0);
    assert_eq!(code(&["canon", "model.json", "--out", "c.json"]), 0);
    assert_eq!(
        code(&[
            "switch",
            "model.json",
            "--layer",
            "1",
            "-i",
            "1",
            "-j",
            "2",
            "--out",
            "s.json"
        ]),
        0
    );
    assert_eq!(
        code(&["verify", "model.json", "--samples", "25", "--seed", "1"]),
        0
    );
    assert_eq!(
        code(&["train", "model.json", "data.csv", "--steps", "5"]),
        0
    );
    assert_eq!(
        code(&[
            "equivariance",
            "model.json",
            "data.csv",
            "--seed",
            "2",
            "--steps",
            "20"
        ]),
        0
    );

    // Exit code 1: checks that ran and answered no.
    fs::write(root.join("perturbed.json"), model.replace("0.5]", "0.625]")).unwrap();
    assert_eq!(code(&["equiv", "model.json", "perturbed.json"]), 1);
    assert_eq!(
        code(&["verify", "model.json", "--samples", "25", "--inject-fault"]),
        1
    );
    assert_eq!(
        code(&[
            "equivariance",
            "model.json",
            "data.csv",
            "--seed",
            "2",
            "--steps",
            "20",
            "--traj-tol",
            "0.0"
        ]),
        1
    );

    // Exit code 2: unusable input.
    assert_eq!(code(&["count"]), 2);
    assert_eq!(code(&["count", "--widths", "0"]), 2);
    assert_eq!(code(&["equiv", "model.json", "absent.json"]), 2);
    assert_eq!(code(&["train", "model.json", "bad.csv"]), 2);
    assert_eq!(code(&["verify", "model.json", "--samples", "0"]), 2);
    assert_eq!(code(&["nonsense"]), 2);

    let elapsed = start.elapsed();
    println!(
        "PASS: model serialization round-trips bitwise and all subcommands follow the \
         0/1/2 exit-code contract in {elapsed:?}"
    );
}
