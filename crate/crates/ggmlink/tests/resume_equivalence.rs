//! A run interrupted at a checkpoint and resumed must reproduce the
//! uninterrupted run exactly, draw for draw.

use ggmlink::io;
use ggmlink::model::{center_by_group, GroupDataset, Hyperparameters};
use ggmlink::sampler::{run_chain, run_chain_with, RunOptions, SamplerConfig};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

fn toy_dataset(seed: u64, k: usize, n: usize, p: usize) -> GroupDataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let raw: Vec<DMatrix<f64>> = (0..k)
        .map(|_| DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    center_by_group(&raw).unwrap()
}

fn as_json(output: &ggmlink::model::ChainOutput) -> String {
    let dto = io::ChainOutputDto::from_output(output);
    serde_json::to_string(&dto).unwrap()
}

#[test]
fn resumed_run_is_bit_identical_to_uninterrupted_run() {
    let data = toy_dataset(7, 2, 60, 8);
    let hyper = Hyperparameters::new(0.02, 0.5, 1.0, 0.2).unwrap();
    let config = SamplerConfig { burn_in: 40, keep: 110, thin: 1, seed: 99, ..Default::default() };

    let dir = tempfile::tempdir().unwrap();
    let cp_path = dir.path().join("chain.checkpoint.json");

    // Reference: one uninterrupted run.
    let reference = run_chain(&data, &hyper, &config).unwrap();

    // Same run, but checkpointing every 60 sweeps (the last checkpoint lands
    // at sweep 120 of 150).
    let checkpointed = run_chain_with(
        &data,
        &hyper,
        &config,
        RunOptions {
            checkpoint_every: Some(60),
            checkpoint_path: Some(cp_path.clone()),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(as_json(&reference), as_json(&checkpointed));

    // Restart from the on-disk checkpoint and finish the remaining sweeps.
    let cp = io::load_checkpoint(&cp_path).unwrap();
    assert_eq!(cp.sweeps_done, 120);
    let resumed = run_chain_with(
        &data,
        &hyper,
        &config,
        RunOptions { resume: Some(cp), ..Default::default() },
    )
    .unwrap();

    assert_eq!(resumed.n_kept, reference.n_kept);
    assert_eq!(as_json(&reference), as_json(&resumed));
}

#[test]
fn checkpoint_with_mismatched_config_is_rejected() {
    let data = toy_dataset(3, 1, 40, 5);
    let hyper = Hyperparameters::new(0.02, 0.5, 1.0, 0.2).unwrap();
    let config = SamplerConfig { burn_in: 10, keep: 50, thin: 1, seed: 5, ..Default::default() };

    let dir = tempfile::tempdir().unwrap();
    let cp_path = dir.path().join("chain.checkpoint.json");
    run_chain_with(
        &data,
        &hyper,
        &config,
        RunOptions {
            checkpoint_every: Some(30),
            checkpoint_path: Some(cp_path.clone()),
            ..Default::default()
        },
    )
    .unwrap();

    let cp = io::load_checkpoint(&cp_path).unwrap();
    let longer = SamplerConfig { keep: 80, ..config };
    let err = run_chain_with(
        &data,
        &hyper,
        &longer,
        RunOptions { resume: Some(cp), ..Default::default() },
    )
    .unwrap_err();
    assert!(err.to_string().contains("checkpoint"), "unexpected error: {err}");
}

#[test]
fn seeds_fully_determine_a_run() {
    let data = toy_dataset(11, 2, 50, 6);
    let hyper = Hyperparameters::new(0.02, 0.5, 1.0, 0.3).unwrap();
    let config = SamplerConfig { burn_in: 30, keep: 70, thin: 2, seed: 123, ..Default::default() };

    let a = run_chain(&data, &hyper, &config).unwrap();
    let b = run_chain(&data, &hyper, &config).unwrap();
    assert_eq!(as_json(&a), as_json(&b));

    let other = run_chain(&data, &hyper, &SamplerConfig { seed: 124, ..config }).unwrap();
    assert_ne!(as_json(&a), as_json(&other));
}
