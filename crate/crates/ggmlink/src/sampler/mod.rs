//! The MCMC engine: per-sweep orchestration of the column Gibbs updates, graph
//! updates, and the correlation-matrix step, plus chain-level bookkeeping
//! (retention, checkpointing, progress reporting) and the conditional
//! resampling run used for final precision estimates.

mod patterns;
mod phi;
mod updates;

pub use patterns::{edge_conditional, EdgeConditional, PatternInfo, PatternTable, MAX_GROUPS};
pub use phi::{standardized_edge_vectors, update_phi, PhiOutcome};

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ChainState, ChainOutput, GroupDataset, Hyperparameters};

use updates::Workspace;

/// Run-length and kernel switches for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub keep: usize,
    pub thin: usize,
    pub seed: u64,
    /// Freeze Phi at the identity: the model decouples into independent
    /// single-group samplers (separate-estimation mode).
    pub fix_phi_identity: bool,
    /// Smallest eigenvalue a Phi proposal may have; anything below is an
    /// automatic Metropolis rejection.
    pub phi_proposal_floor: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in: 5_000,
            keep: 20_000,
            thin: 1,
            seed: 0,
            fix_phi_identity: false,
            phi_proposal_floor: 1e-8,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.keep == 0 {
            return Err(Error::InvalidArgument("keep must be >= 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be >= 1".into()));
        }
        if self.thin > self.keep {
            return Err(Error::InvalidArgument(format!(
                "thin ({}) exceeds keep ({}); no state would be retained",
                self.thin, self.keep
            )));
        }
        if !(self.phi_proposal_floor > 0.0) {
            return Err(Error::InvalidArgument("phi_proposal_floor must be positive".into()));
        }
        Ok(())
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.keep
    }
}

/// Progress snapshot passed to the optional reporting callback every
/// `PROGRESS_INTERVAL` sweeps and at the end of the run.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub sweep: usize,
    pub total: usize,
    pub n_kept: usize,
    pub seconds_per_sweep: f64,
    pub phi_acceptance: Option<f64>,
}

pub const PROGRESS_INTERVAL: usize = 1_000;

/// Everything needed to continue an interrupted run exactly: configuration
/// echo, position, full state, RNG stream, and the partial tallies.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: SamplerConfig,
    pub sweeps_done: usize,
    pub state: ChainState,
    pub rng: ChaCha20Rng,
    pub partial: ChainOutput,
}

/// Optional run services; `RunOptions::default()` is a plain uninterrupted run.
#[derive(Default)]
pub struct RunOptions<'a> {
    pub resume: Option<Checkpoint>,
    pub checkpoint_every: Option<usize>,
    pub checkpoint_path: Option<PathBuf>,
    pub progress: Option<&'a mut dyn FnMut(&Progress)>,
}

/// One full iteration of the sampler on `state`, in place: for each group in
/// ascending order, all p columns then the graph; then one Phi update.
pub fn sweep<R: rand::Rng>(
    state: &mut ChainState,
    data: &GroupDataset,
    hyper: &Hyperparameters,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<PhiOutcome> {
    let mut engine = Engine::new(data, *hyper, *config, true, true)?;
    engine.sweep(state, rng, 0)
}

struct Engine<'a> {
    data: &'a GroupDataset,
    hyper: Hyperparameters,
    config: SamplerConfig,
    ws: Workspace,
    update_graphs: bool,
    do_update_phi: bool,
    z_buf: Vec<f64>,
    m_edges: usize,
}

impl<'a> Engine<'a> {
    fn new(
        data: &'a GroupDataset,
        hyper: Hyperparameters,
        config: SamplerConfig,
        update_graphs: bool,
        do_update_phi: bool,
    ) -> Result<Self> {
        hyper.validate()?;
        config.validate()?;
        let k = data.k();
        let p = data.p();
        Ok(Engine {
            data,
            hyper,
            config,
            ws: Workspace::new(k, p),
            update_graphs,
            do_update_phi,
            z_buf: vec![0.0; k],
            m_edges: p * (p - 1) / 2,
        })
    }

    fn abort(err: Error, context: &'static str, sweep: usize, group: usize) -> Error {
        Error::NumericalAbort { context, sweep, group, detail: err.to_string() }
    }

    /// One full sweep. The sigma caches are re-derived from `state` up front,
    /// so callers may mutate the state (or restore it from a checkpoint)
    /// between sweeps; this also stops floating-point drift from the
    /// incremental column updates accumulating across sweeps.
    fn sweep<R: rand::Rng>(
        &mut self,
        state: &mut ChainState,
        rng: &mut R,
        sweep_idx: usize,
    ) -> Result<PhiOutcome> {
        let k_groups = state.k();
        let p = state.p();
        self.ws
            .refresh_sigma(state)
            .map_err(|e| Self::abort(e, "sigma refresh", sweep_idx, 0))?;
        let patterns = PatternTable::build(&state.phi, &self.hyper)
            .map_err(|e| Self::abort(e, "pattern table", sweep_idx, 0))?;
        for k in 0..k_groups {
            for j in 0..p {
                updates::update_column(
                    k, j, state, self.data, &self.hyper, &patterns, &mut self.ws, rng,
                )
                .map_err(|e| Self::abort(e, "update_column", sweep_idx, k))?;
            }
            if self.update_graphs {
                updates::update_graph(k, state, &self.hyper, &patterns, &mut self.ws, rng);
            }
        }
        if self.do_update_phi && k_groups > 1 && !self.config.fix_phi_identity {
            let scatter = phi::phi_scatter(state, &self.hyper, &mut self.z_buf);
            let outcome = phi::update_phi(
                state,
                &scatter,
                self.m_edges,
                self.config.fix_phi_identity,
                self.config.phi_proposal_floor,
                rng,
            )
            .map_err(|e| Self::abort(e, "update_phi", sweep_idx, 0))?;
            Ok(outcome)
        } else {
            Ok(PhiOutcome::default())
        }
    }
}

/// Retained-state audit: Cholesky on every precision matrix and on Phi.
fn retained_state_valid(state: &ChainState) -> bool {
    state.omega.iter().all(linalg::is_positive_definite) && linalg::is_positive_definite(&state.phi)
}

/// Runs one chain: `burn_in` discarded sweeps, then `keep` sweeps of which
/// every `thin`-th state is tallied into the output.
pub fn run_chain(
    data: &GroupDataset,
    hyper: &Hyperparameters,
    config: &SamplerConfig,
) -> Result<ChainOutput> {
    run_chain_with(data, hyper, config, RunOptions::default())
}

pub fn run_chain_with(
    data: &GroupDataset,
    hyper: &Hyperparameters,
    config: &SamplerConfig,
    mut options: RunOptions<'_>,
) -> Result<ChainOutput> {
    config.validate()?;
    let k = data.k();
    let p = data.p();
    let mut engine = Engine::new(data, *hyper, *config, true, true)?;

    let (mut state, mut rng, mut output, start) = match options.resume.take() {
        Some(cp) => {
            if cp.config != *config {
                return Err(Error::InvalidArgument(
                    "checkpoint configuration does not match the requested run".into(),
                ));
            }
            if cp.state.k() != k || cp.state.p() != p {
                return Err(Error::Dimension("checkpoint state shape mismatch".into()));
            }
            cp.state.validate()?;
            (cp.state, cp.rng, cp.partial, cp.sweeps_done)
        }
        None => (
            ChainState::initial(k, p),
            ChaCha20Rng::seed_from_u64(config.seed),
            ChainOutput::new(k, p, config.seed),
            0,
        ),
    };

    let total = config.total_sweeps();
    let timer = Instant::now();
    let sweeps_this_run = total.saturating_sub(start).max(1);
    for t in start..total {
        let outcome = engine.sweep(&mut state, &mut rng, t)?;
        output.phi_proposals += outcome.attempted;
        output.phi_accepts += outcome.accepted;
        if t >= config.burn_in && (t - config.burn_in + 1) % config.thin == 0 {
            if !retained_state_valid(&state) {
                output.invalid_retained += 1;
            }
            output.record(&state);
        }
        output.sweeps_run = t + 1;

        // Structural invariants are cheap to violate silently and expensive to
        // debug later; audit a sparse subset of sweeps in debug builds.
        if cfg!(debug_assertions) && (t < 3 || t % 997 == 0) {
            state.validate()?;
        }

        let done = t + 1;
        if done % PROGRESS_INTERVAL == 0 || done == total {
            if let Some(cb) = options.progress.as_mut() {
                cb(&Progress {
                    sweep: done,
                    total,
                    n_kept: output.n_kept,
                    seconds_per_sweep: timer.elapsed().as_secs_f64()
                        / (done - start).max(1) as f64,
                    phi_acceptance: output.phi_acceptance_rate(),
                });
            }
        }
        if let (Some(every), Some(path)) = (options.checkpoint_every, options.checkpoint_path.as_ref())
        {
            if every > 0 && done % every == 0 && done < total {
                let cp = Checkpoint {
                    config: *config,
                    sweeps_done: done,
                    state: state.clone(),
                    rng: rng.clone(),
                    partial: output.clone(),
                };
                crate::io::save_checkpoint(path, &cp)?;
            }
        }
        let _ = sweeps_this_run;
    }
    Ok(output)
}

/// Re-estimates the precision matrices with graphs and Phi frozen: runs the
/// column Gibbs updates only and returns the across-iteration mean of each
/// Omega_k, symmetrized.
pub fn resample_omega(
    data: &GroupDataset,
    g_fixed: &[nalgebra::DMatrix<u8>],
    phi_fixed: &nalgebra::DMatrix<f64>,
    hyper: &Hyperparameters,
    config: &SamplerConfig,
) -> Result<Vec<nalgebra::DMatrix<f64>>> {
    config.validate()?;
    let k = data.k();
    let p = data.p();
    if g_fixed.len() != k {
        return Err(Error::Dimension(format!("{} graphs for {k} groups", g_fixed.len())));
    }
    let mut state = ChainState::initial(k, p);
    state.graphs = g_fixed.to_vec();
    state.phi = phi_fixed.clone();
    state.validate()?;

    let mut engine = Engine::new(data, *hyper, *config, false, false)?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut mean: Vec<nalgebra::DMatrix<f64>> =
        (0..k).map(|_| nalgebra::DMatrix::zeros(p, p)).collect();
    let mut n_kept = 0usize;
    for t in 0..config.total_sweeps() {
        engine.sweep(&mut state, &mut rng, t)?;
        if t >= config.burn_in && (t - config.burn_in + 1) % config.thin == 0 {
            n_kept += 1;
            let w = 1.0 / n_kept as f64;
            for g in 0..k {
                mean[g].zip_apply(&state.omega[g], |m, x| *m += (x - *m) * w);
            }
        }
    }
    for m in &mut mean {
        linalg::symmetrize(m);
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, StandardNormal};

    fn small_data(seed: u64, k: usize, n: usize, p: usize) -> GroupDataset {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let raw: Vec<DMatrix<f64>> = (0..k)
            .map(|_| DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        crate::model::center_by_group(&raw).unwrap()
    }

    fn quick_config(seed: u64) -> SamplerConfig {
        SamplerConfig { burn_in: 50, keep: 100, thin: 1, seed, ..SamplerConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        assert!(SamplerConfig { keep: 0, ..SamplerConfig::default() }.validate().is_err());
        assert!(SamplerConfig { thin: 0, ..SamplerConfig::default() }.validate().is_err());
        assert!(SamplerConfig { thin: 200, keep: 100, ..SamplerConfig::default() }
            .validate()
            .is_err());
    }

    #[test]
    fn run_chain_bookkeeping() {
        let data = small_data(1, 2, 25, 5);
        let hyper = Hyperparameters::new(0.05, 0.5, 1.0, 0.2).unwrap();
        let config = SamplerConfig { burn_in: 20, keep: 60, thin: 3, seed: 9, ..Default::default() };
        let out = run_chain(&data, &hyper, &config).unwrap();
        assert_eq!(out.n_kept, 20);
        assert_eq!(out.phi_draws.len(), 20);
        assert_eq!(out.sweeps_run, 80);
        assert_eq!(out.invalid_retained, 0);
        for k in 0..2 {
            for j in 0..5 {
                for i in 0..j {
                    assert!(out.edge_counts[k][(i, j)] <= out.n_kept as u32);
                }
            }
        }
        // For K=2 each sweep attempts one global Phi move plus one entry move.
        assert_eq!(out.phi_proposals, 160);
    }

    #[test]
    fn identical_seeds_are_deterministic() {
        let data = small_data(2, 2, 20, 4);
        let hyper = Hyperparameters::new(0.05, 0.5, 1.0, 0.2).unwrap();
        let config = quick_config(33);
        let a = run_chain(&data, &hyper, &config).unwrap();
        let b = run_chain(&data, &hyper, &config).unwrap();
        assert_eq!(a.edge_counts[0], b.edge_counts[0]);
        assert!((&a.omega_mean[1] - &b.omega_mean[1]).amax() == 0.0);
        assert_eq!(a.phi_draws.last().unwrap(), b.phi_draws.last().unwrap());
    }

    #[test]
    fn single_sweep_determinism() {
        let data = small_data(4, 2, 20, 4);
        let hyper = Hyperparameters::new(0.05, 0.5, 1.0, 0.2).unwrap();
        let config = quick_config(5);
        let mut s1 = ChainState::initial(2, 4);
        let mut s2 = ChainState::initial(2, 4);
        let mut r1 = ChaCha20Rng::seed_from_u64(77);
        let mut r2 = ChaCha20Rng::seed_from_u64(77);
        sweep(&mut s1, &data, &hyper, &config, &mut r1).unwrap();
        sweep(&mut s2, &data, &hyper, &config, &mut r2).unwrap();
        assert!((&s1.omega[0] - &s2.omega[0]).amax() == 0.0);
        assert_eq!(s1.graphs, s2.graphs);
        s1.validate().unwrap();
    }

    #[test]
    fn fix_phi_identity_keeps_phi_fixed() {
        let data = small_data(3, 3, 20, 4);
        let hyper = Hyperparameters::new(0.05, 0.5, 1.0, 0.2).unwrap();
        let config = SamplerConfig { fix_phi_identity: true, ..quick_config(3) };
        let out = run_chain(&data, &hyper, &config).unwrap();
        assert_eq!(out.phi_proposals, 0);
        for draw in &out.phi_draws {
            assert!((draw - DMatrix::identity(3, 3)).amax() == 0.0);
        }
    }

    #[test]
    fn resample_with_empty_graph_shrinks_off_diagonals() {
        let data = small_data(6, 1, 400, 4);
        let hyper = Hyperparameters::new(0.02, 0.5, 1.0, 0.2).unwrap();
        let config = SamplerConfig { burn_in: 100, keep: 400, thin: 1, seed: 8, ..Default::default() };
        let graphs = vec![DMatrix::<u8>::zeros(4, 4)];
        let phi = DMatrix::identity(1, 1);
        let est = resample_omega(&data, &graphs, &phi, &hyper, &config).unwrap();
        for j in 0..4 {
            for i in 0..j {
                assert!(est[0][(i, j)].abs() < 0.05, "off-diagonal {}", est[0][(i, j)]);
            }
            assert!(est[0][(j, j)] > 0.5);
        }
    }
}
