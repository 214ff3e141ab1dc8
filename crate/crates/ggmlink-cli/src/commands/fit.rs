//! `ggmlink fit`: run MCMC chains on per-group data CSVs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ggmlink::io;
use ggmlink::model::{default_pi, GroupDataset, Hyperparameters};
use ggmlink::sampler::{run_chain_with, Progress, RunOptions, SamplerConfig};

use crate::config::{self, load_file_config, pick, resolve_out_dir, write_manifest};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// TOML configuration file (flags override file values).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Per-group data CSVs, one per group, same column header in each.
    #[arg(long, value_delimiter = ',')]
    pub data: Option<Vec<PathBuf>>,
    /// Output directory; relative paths resolve against $GGMLINK_OUTPUT_ROOT.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed; chain c runs with seed + c.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of MCMC chains (run in parallel).
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Retained iterations after burn-in.
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Spike standard deviation.
    #[arg(long)]
    pub v0: Option<f64>,
    /// Slab standard deviation.
    #[arg(long)]
    pub v1: Option<f64>,
    /// Exponential rate hyperparameter on precision diagonals.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Prior edge-inclusion probability; defaults to 2/(p-1).
    #[arg(long)]
    pub pi: Option<f64>,
    /// Freeze the cross-group correlation at the identity (separate
    /// estimation per group).
    #[arg(long)]
    pub fix_phi_identity: bool,
    /// Standardize each column to unit variance during ingestion.
    #[arg(long)]
    pub scale: bool,
    /// Write a resumable checkpoint every N sweeps (0 disables).
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Resume chains from their checkpoint files if present.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResolvedFit {
    pub data: Vec<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub chains: usize,
    pub burn_in: usize,
    pub keep: usize,
    pub thin: usize,
    pub v0: f64,
    pub v1: f64,
    pub lambda: f64,
    /// Resolved after ingestion when not supplied (2/(p-1)).
    pub pi: f64,
    pub fix_phi_identity: bool,
    pub scale: bool,
    pub checkpoint_every: usize,
    pub resume: bool,
}

pub fn chain_output_path(out: &Path, chain: usize) -> PathBuf {
    out.join(format!("chain{}.json", chain + 1))
}

pub fn checkpoint_path(out: &Path, chain: usize) -> PathBuf {
    out.join(format!("chain{}.checkpoint.json", chain + 1))
}

/// Resolve flags against the config file; `pi` needs the data dimension, so
/// ingestion happens here too.
pub fn resolve(args: &FitArgs) -> Result<(ResolvedFit, GroupDataset)> {
    let file = load_file_config(args.config.as_deref())?;
    let data_paths = config::require(
        args.data.clone(),
        file.fit.data.clone(),
        "--data (or [fit] data in the config file)",
    )?;
    let out = config::require(
        args.out.clone(),
        file.global.out.clone(),
        "--out (or [global] out in the config file)",
    )?;
    let scale = args.scale || file.fit.scale.unwrap_or(false);
    let dataset = io::read_group_csvs(&data_paths, scale)?;
    let pi = match args.pi.or(file.fit.pi) {
        Some(v) => v,
        None => default_pi(dataset.p())?,
    };
    let resolved = ResolvedFit {
        data: data_paths,
        out: resolve_out_dir(&out),
        seed: pick(args.seed, file.global.seed, 0),
        chains: pick(args.chains, file.fit.chains, 2),
        burn_in: pick(args.burn_in, file.fit.burn_in, 5_000),
        keep: pick(args.keep, file.fit.keep, 20_000),
        thin: pick(args.thin, file.fit.thin, 1),
        v0: pick(args.v0, file.fit.v0, 0.01),
        v1: pick(args.v1, file.fit.v1, 0.1),
        lambda: pick(args.lambda, file.fit.lambda, 1.0),
        pi,
        fix_phi_identity: args.fix_phi_identity || file.fit.fix_phi_identity.unwrap_or(false),
        scale,
        checkpoint_every: pick(args.checkpoint_every, file.fit.checkpoint_every, 0),
        resume: args.resume,
    };
    if resolved.chains == 0 {
        bail!("--chains must be at least 1");
    }
    Ok((resolved, dataset))
}

pub fn hyper_of(r: &ResolvedFit) -> Result<Hyperparameters> {
    Hyperparameters::new(r.v0, r.v1, r.lambda, r.pi).map_err(Into::into)
}

pub fn sampler_config_of(r: &ResolvedFit, chain: usize) -> SamplerConfig {
    SamplerConfig {
        burn_in: r.burn_in,
        keep: r.keep,
        thin: r.thin,
        seed: r.seed + chain as u64,
        fix_phi_identity: r.fix_phi_identity,
        ..SamplerConfig::default()
    }
}

pub fn run(args: &FitArgs) -> Result<()> {
    let (resolved, dataset) = resolve(args)?;
    let hyper = hyper_of(&resolved)?;
    super::ensure_out_dir(&resolved.out)?;
    write_manifest(&resolved.out, "fit", &resolved)?;

    let outputs: Vec<_> = (0..resolved.chains)
        .into_par_iter()
        .map(|chain| run_one_chain(&resolved, &dataset, &hyper, chain))
        .collect::<Result<Vec<_>>>()?;

    for (chain, output) in outputs.iter().enumerate() {
        let path = chain_output_path(&resolved.out, chain);
        io::save_chain_output(&path, output)?;
        match output.phi_acceptance_rate() {
            Some(rate) => println!(
                "chain {}: {} kept sweeps, phi acceptance {:.3} ({}/{}) -> {}",
                chain + 1,
                output.n_kept,
                rate,
                output.phi_accepts,
                output.phi_proposals,
                path.display()
            ),
            None => println!(
                "chain {}: {} kept sweeps, phi fixed at identity -> {}",
                chain + 1,
                output.n_kept,
                path.display()
            ),
        }
    }
    Ok(())
}

fn run_one_chain(
    resolved: &ResolvedFit,
    dataset: &GroupDataset,
    hyper: &Hyperparameters,
    chain: usize,
) -> Result<ggmlink::model::ChainOutput> {
    let config = sampler_config_of(resolved, chain);
    let cp_path = checkpoint_path(&resolved.out, chain);
    let resume = if resolved.resume && cp_path.exists() {
        let cp = io::load_checkpoint(&cp_path)
            .with_context(|| format!("loading checkpoint {}", cp_path.display()))?;
        eprintln!("[chain {}] resuming from sweep {}", chain + 1, cp.sweeps_done);
        Some(cp)
    } else {
        None
    };
    let mut progress = |p: &Progress| {
        eprintln!(
            "[chain {}] sweep {}/{} kept={} {:.2} ms/sweep{}",
            chain + 1,
            p.sweep,
            p.total,
            p.n_kept,
            p.seconds_per_sweep * 1e3,
            p.phi_acceptance.map_or(String::new(), |a| format!(" phi_acc={a:.3}")),
        );
    };
    let options = RunOptions {
        resume,
        checkpoint_every: (resolved.checkpoint_every > 0).then_some(resolved.checkpoint_every),
        checkpoint_path: (resolved.checkpoint_every > 0).then(|| cp_path.clone()),
        progress: Some(&mut progress),
    };
    run_chain_with(dataset, hyper, &config, options)
        .with_context(|| format!("chain {} failed", chain + 1))
}
