use std::fs;

use fts_core::experiment::{
    emit_report, load_results, run_training, seed_list, ArchId, ExperimentConfig, RunStatus,
    CURVES_CSV, RESULTS_CSV,
};
use fts_core::linalg::{uniform_matrix, Rng};
use fts_core::network::{softmax_cross_entropy, INPUT_DIM};
use fts_core::{ActivationSpec, Dataset, Network, TrainConfig};

/// Low-amplitude noise plus a bright block of pixels whose position encodes the label.
fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut rng = Rng::new(seed);
    let mut images = uniform_matrix(&mut rng, n, INPUT_DIM, 0.0, 0.2).unwrap();
    let block = INPUT_DIM / 10;
    let labels: Vec<u8> = (0..n).map(|_| rng.below(10) as u8).collect();
    for (i, &label) in labels.iter().enumerate() {
        for c in label as usize * block..(label as usize + 1) * block {
            images.set(i, c, images.get(i, c) + 0.8);
        }
    }
    Dataset::new(images, labels).unwrap()
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 16,
        ..TrainConfig::default()
    }
}

#[test]
fn loss_decreases_on_a_fixed_batch() {
    let data = synthetic(64, 1);
    for spec in [ActivationSpec::relu(), ActivationSpec::fts(-0.2)] {
        let mut rng = Rng::new(7);
        let mut net = Network::new(INPUT_DIM, ArchId::Dfnn5.sizes(), spec, &mut rng).unwrap();
        let config = TrainConfig {
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let loss = |net: &Network| {
            softmax_cross_entropy(&net.predict(&data.images).unwrap(), &data.labels)
                .unwrap()
                .0
        };
        let before = loss(&net);
        for _ in 0..200 {
            net.train_step(&data.images, &data.labels, &config, &mut rng)
                .unwrap();
        }
        let after = loss(&net);
        assert!(after < 0.5 * before, "{spec}: {before} -> {after}");
    }
}

#[test]
fn runs_are_reproducible_and_isolated() {
    let (train, test) = (synthetic(96, 2), synthetic(32, 3));
    let config = ExperimentConfig::new(
        ArchId::Dfnn5,
        ActivationSpec::fts(-0.2),
        quick(2),
        seed_list(0, 2),
    );
    let a = run_training(&config, &train, &test).unwrap();
    let b = run_training(&config, &train, &test).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2);
    assert_ne!(a[0].test_curve, a[1].test_curve);

    // The second seed's run does not depend on the first one being present.
    let solo = ExperimentConfig::new(ArchId::Dfnn5, ActivationSpec::fts(-0.2), quick(2), vec![0]);
    assert_eq!(run_training(&solo, &train, &test).unwrap()[0], a[0]);
}

#[test]
fn curves_have_one_entry_per_epoch() {
    let (train, test) = (synthetic(64, 4), synthetic(32, 5));
    let config = ExperimentConfig::new(ArchId::Dfnn5, ActivationSpec::relu(), quick(3), vec![9]);
    let run = &run_training(&config, &train, &test).unwrap()[0];
    assert_eq!(run.epochs_completed, 3);
    assert_eq!(run.train_curve.len(), 3);
    assert_eq!(run.test_curve.len(), 3);
    assert_eq!(run.final_test_accuracy, run.test_curve[2]);
    assert!(run
        .test_curve
        .iter()
        .chain(&run.train_curve)
        .all(|a| (0.0..=1.0).contains(a)));
}

#[test]
fn final_eval_only_skips_curves() {
    let (train, test) = (synthetic(64, 4), synthetic(32, 5));
    let mut config =
        ExperimentConfig::new(ArchId::Dfnn5, ActivationSpec::relu(), quick(2), vec![9]);
    config.eval_every_epoch = false;
    let run = &run_training(&config, &train, &test).unwrap()[0];
    assert!(run.test_curve.is_empty());
    assert_eq!(run.epochs_completed, 2);
    config.eval_every_epoch = true;
    let full = &run_training(&config, &train, &test).unwrap()[0];
    assert_eq!(run.final_test_accuracy, full.final_test_accuracy);
}

#[test]
fn zero_epochs_is_chance_level() {
    let (train, test) = (synthetic(64, 6), synthetic(500, 7));
    let config = ExperimentConfig::new(ArchId::Dfnn5, ActivationSpec::relu(), quick(0), vec![0]);
    let run = &run_training(&config, &train, &test).unwrap()[0];
    assert!(run.test_curve.is_empty());
    assert!(run.final_test_accuracy < 0.3, "{}", run.final_test_accuracy);
}

#[test]
fn divergence_is_not_converged() {
    let (train, test) = (synthetic(64, 8), synthetic(32, 9));
    let config = ExperimentConfig::new(
        ArchId::Dfnn5,
        ActivationSpec::relu(),
        TrainConfig {
            learning_rate: 1e6,
            ..quick(5)
        },
        vec![0],
    );
    let run = &run_training(&config, &train, &test).unwrap()[0];
    assert_eq!(run.status, RunStatus::NotConverged);
    assert!(run.epochs_completed < 5);
    assert_eq!(run.test_curve.len(), run.epochs_completed);
}

#[test]
fn single_run_report_shape() {
    let (train, test) = (synthetic(32, 10), synthetic(16, 11));
    let config = ExperimentConfig::new(
        ArchId::Dfnn5,
        ActivationSpec::fts(-0.2),
        TrainConfig {
            batch_size: 32,
            ..TrainConfig::default()
        },
        vec![0],
    );
    let results = run_training(&config, &train, &test).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&results, dir.path()).unwrap();
    let rows = |f: &str| {
        fs::read_to_string(dir.path().join(f))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert_eq!(rows(RESULTS_CSV), 1);
    assert_eq!(rows(CURVES_CSV), 20);

    let first = fs::read(dir.path().join(CURVES_CSV)).unwrap();
    let again = tempfile::tempdir().unwrap();
    emit_report(&run_training(&config, &train, &test).unwrap(), again.path()).unwrap();
    assert_eq!(first, fs::read(again.path().join(CURVES_CSV)).unwrap());
    assert_eq!(load_results(dir.path()).unwrap(), results);
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, b"x").unwrap();
    assert!(emit_report(&[], &file).is_err());
}
