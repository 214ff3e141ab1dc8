//! Domain types shared by the sampler and inference layers: centered group
//! data with cached scatter matrices, prior hyperparameters, chain state, and
//! chain output tallies.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for the "columns are centered" invariant.
pub const CENTERING_TOL: f64 = 1e-8;

/// One group's observations: centered data, sample count, and the cached
/// scatter matrix `S = X^T X` (the only statistic the conditionals need).
#[derive(Debug, Clone)]
pub struct GroupData {
    pub n: usize,
    pub x: DMatrix<f64>,
    pub scatter: DMatrix<f64>,
}

/// A collection of K groups observed on the same p variables.
#[derive(Debug, Clone)]
pub struct GroupDataset {
    groups: Vec<GroupData>,
    p: usize,
    var_names: Option<Vec<String>>,
}

impl GroupDataset {
    /// Centers each group's columns (optionally scaling them to unit sample
    /// standard deviation first) and caches the scatter matrices.
    pub fn from_matrices(raw: &[DMatrix<f64>], scale: bool) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument("need at least one group".into()));
        }
        let p = raw[0].ncols();
        if p < 2 {
            return Err(Error::Dimension(format!("need p >= 2 variables, got {p}")));
        }
        let mut groups = Vec::with_capacity(raw.len());
        for (k, x) in raw.iter().enumerate() {
            if x.ncols() != p {
                return Err(Error::Dimension(format!(
                    "group {k} has {} columns, group 0 has {p}",
                    x.ncols()
                )));
            }
            let n = x.nrows();
            if n < 2 {
                return Err(Error::InvalidArgument(format!(
                    "group {k} has {n} rows; need at least 2"
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("group {k} data")));
            }
            let mut centered = x.clone();
            for j in 0..p {
                let mut col = centered.column_mut(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                col.iter_mut().for_each(|v| *v -= mean);
                if scale {
                    let var = col.iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0);
                    if var <= 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "group {k} column {j} has zero variance; cannot scale"
                        )));
                    }
                    let sd = var.sqrt();
                    col.iter_mut().for_each(|v| *v /= sd);
                }
            }
            let mut scatter = centered.transpose() * &centered;
            linalg::symmetrize(&mut scatter);
            groups.push(GroupData { n, x: centered, scatter });
        }
        Ok(GroupDataset { groups, p, var_names: None })
    }

    pub fn with_var_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::Dimension(format!(
                "{} variable names for p={}",
                names.len(),
                self.p
            )));
        }
        self.var_names = Some(names);
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn group(&self, k: usize) -> &GroupData {
        &self.groups[k]
    }

    pub fn groups(&self) -> &[GroupData] {
        &self.groups
    }

    pub fn var_names(&self) -> Option<&[String]> {
        self.var_names.as_deref()
    }

    /// Checks the centering invariant on every column of every group.
    pub fn is_centered(&self) -> bool {
        self.groups.iter().all(|g| {
            (0..self.p).all(|j| {
                let mean = g.x.column(j).iter().sum::<f64>() / g.n as f64;
                mean.abs() <= CENTERING_TOL
            })
        })
    }
}

/// Centers raw per-group matrices and returns the validated dataset.
pub fn center_by_group(raw: &[DMatrix<f64>]) -> Result<GroupDataset> {
    GroupDataset::from_matrices(raw, false)
}

/// Default edge-prior parameter `2/(p-1)`, clipped into `(0, 1 - 1e-6)` so it
/// stays a valid Bernoulli parameter for tiny p.
pub fn default_pi(p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("need p >= 2, got {p}")));
    }
    let raw = 2.0 / (p as f64 - 1.0);
    Ok(raw.min(1.0 - 1e-6))
}

/// Prior hyperparameters: spike/slab standard deviations for off-diagonal
/// precision entries, exponential rate on diagonals (density
/// `(lambda/2) exp(-(lambda/2) x)`), and the edge-prior parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub v0: f64,
    pub v1: f64,
    pub lambda: f64,
    pub pi: f64,
}

impl Hyperparameters {
    pub fn new(v0: f64, v1: f64, lambda: f64, pi: f64) -> Result<Self> {
        let h = Hyperparameters { v0, v1, lambda, pi };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v1 > self.v0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < v0 < v1, got v0={} v1={}",
                self.v0, self.v1
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("need lambda > 0, got {}", self.lambda)));
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::InvalidArgument(format!("need pi in (0,1), got {}", self.pi)));
        }
        Ok(())
    }

    /// Spike or slab standard deviation for one edge-indicator value.
    #[inline]
    pub fn nu(&self, g: u8) -> f64 {
        if g == 1 {
            self.v1
        } else {
            self.v0
        }
    }
}

/// Edge-specific K-variate prior covariance `D Phi D` with
/// `D = diag(nu_1..nu_K)`, `nu_k = v1` if the edge is present in group k else `v0`.
pub fn theta_matrix(g_edge: &[u8], hyper: &Hyperparameters, phi: &DMatrix<f64>) -> DMatrix<f64> {
    let k = g_edge.len();
    debug_assert_eq!(phi.nrows(), k);
    debug_assert_eq!(phi.ncols(), k);
    let mut theta = DMatrix::<f64>::zeros(k, k);
    for b in 0..k {
        let nb = hyper.nu(g_edge[b]);
        for a in 0..k {
            let na = hyper.nu(g_edge[a]);
            theta[(a, b)] = na * phi[(a, b)] * nb;
        }
    }
    theta
}

/// Full MCMC state: per-group precision matrices and adjacency indicators plus
/// the shared cross-group correlation matrix.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub omega: Vec<DMatrix<f64>>,
    pub graphs: Vec<DMatrix<u8>>,
    pub phi: DMatrix<f64>,
}

impl ChainState {
    /// Standard initial state: identity precisions, saturated graphs, identity
    /// Phi. Starting from the full graph lets the first sweeps prune edges
    /// under the slab prior instead of growing from empty; with strongly
    /// cross-group-correlated entries, growing from empty can freeze an edge
    /// out of one group after the others lock it in, because the linked slab
    /// then demands a large value that a spike-constrained draw cannot reach.
    pub fn initial(k: usize, p: usize) -> Self {
        let mut graph = DMatrix::from_element(p, p, 1u8);
        graph.fill_diagonal(0);
        ChainState {
            omega: (0..k).map(|_| DMatrix::identity(p, p)).collect(),
            graphs: (0..k).map(|_| graph.clone()).collect(),
            phi: DMatrix::identity(k, k),
        }
    }

    pub fn k(&self) -> usize {
        self.omega.len()
    }

    pub fn p(&self) -> usize {
        self.omega.first().map_or(0, |m| m.nrows())
    }

    /// Verifies every structural invariant; used after construction and (in
    /// debug builds) after each sweep.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        let p = self.p();
        if self.graphs.len() != k || self.phi.nrows() != k || self.phi.ncols() != k {
            return Err(Error::Dimension("state component counts disagree".into()));
        }
        for (idx, om) in self.omega.iter().enumerate() {
            if om.nrows() != p || om.ncols() != p {
                return Err(Error::Dimension(format!("omega[{idx}] is not {p}x{p}")));
            }
            for j in 0..p {
                for i in 0..j {
                    if (om[(i, j)] - om[(j, i)]).abs() > 1e-8 {
                        return Err(Error::InvalidArgument(format!(
                            "omega[{idx}] not symmetric at ({i},{j})"
                        )));
                    }
                }
            }
            if !linalg::is_positive_definite(om) {
                return Err(Error::NotPositiveDefinite(format!("omega[{idx}]")));
            }
        }
        for (idx, g) in self.graphs.iter().enumerate() {
            if g.nrows() != p || g.ncols() != p {
                return Err(Error::Dimension(format!("graph[{idx}] is not {p}x{p}")));
            }
            for j in 0..p {
                if g[(j, j)] != 0 {
                    return Err(Error::InvalidArgument(format!("graph[{idx}] has nonzero diagonal")));
                }
                for i in 0..j {
                    let v = g[(i, j)];
                    if v > 1 || v != g[(j, i)] {
                        return Err(Error::InvalidArgument(format!(
                            "graph[{idx}] not symmetric binary at ({i},{j})"
                        )));
                    }
                }
            }
        }
        validate_correlation(&self.phi)?;
        Ok(())
    }

    /// Pattern bits for edge (i, j): bit k set iff the edge is present in group k.
    #[inline]
    pub fn edge_bits(&self, i: usize, j: usize) -> usize {
        let mut bits = 0usize;
        for (k, g) in self.graphs.iter().enumerate() {
            bits |= (g[(i, j)] as usize) << k;
        }
        bits
    }
}

/// Correlation-matrix validity: symmetric, unit diagonal, off-diagonals in
/// (-1, 1), positive definite.
pub fn validate_correlation(phi: &DMatrix<f64>) -> Result<()> {
    let k = phi.nrows();
    if phi.ncols() != k {
        return Err(Error::Dimension("phi not square".into()));
    }
    for i in 0..k {
        if (phi[(i, i)] - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("phi diagonal at {i} is {}", phi[(i, i)])));
        }
        for j in 0..i {
            let v = phi[(i, j)];
            if (v - phi[(j, i)]).abs() > 1e-10 || v.abs() >= 1.0 {
                return Err(Error::InvalidArgument(format!("phi off-diagonal ({i},{j}) = {v}")));
            }
        }
    }
    if !linalg::is_positive_definite(phi) {
        return Err(Error::NotPositiveDefinite("phi".into()));
    }
    Ok(())
}

/// Tallies accumulated over the retained sweeps of one chain. Off-diagonal
/// inclusion counts give PPIs; precision entries keep streaming mean and M2
/// (sum of squared deviations) so convergence diagnostics don't need stored
/// trajectories; Phi draws are kept in full (K is small).
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub k: usize,
    pub p: usize,
    pub seed: u64,
    pub n_kept: usize,
    pub edge_counts: Vec<DMatrix<u32>>,
    pub phi_draws: Vec<DMatrix<f64>>,
    pub omega_mean: Vec<DMatrix<f64>>,
    pub omega_m2: Vec<DMatrix<f64>>,
    pub phi_proposals: usize,
    pub phi_accepts: usize,
    pub sweeps_run: usize,
    /// Retained states that failed the positive-definiteness audit (expected 0).
    pub invalid_retained: usize,
}

impl ChainOutput {
    pub fn new(k: usize, p: usize, seed: u64) -> Self {
        ChainOutput {
            k,
            p,
            seed,
            n_kept: 0,
            edge_counts: (0..k).map(|_| DMatrix::zeros(p, p)).collect(),
            phi_draws: Vec::new(),
            omega_mean: (0..k).map(|_| DMatrix::zeros(p, p)).collect(),
            omega_m2: (0..k).map(|_| DMatrix::zeros(p, p)).collect(),
            phi_proposals: 0,
            phi_accepts: 0,
            sweeps_run: 0,
            invalid_retained: 0,
        }
    }

    /// Folds one retained state into the tallies (Welford update for the
    /// precision moments).
    pub fn record(&mut self, state: &ChainState) {
        self.n_kept += 1;
        let n = self.n_kept as f64;
        for k in 0..self.k {
            let g = &state.graphs[k];
            let counts = &mut self.edge_counts[k];
            for j in 0..self.p {
                for i in 0..self.p {
                    counts[(i, j)] += g[(i, j)] as u32;
                }
            }
            let om = &state.omega[k];
            let mean = &mut self.omega_mean[k];
            let m2 = &mut self.omega_m2[k];
            for j in 0..self.p {
                for i in 0..self.p {
                    let x = om[(i, j)];
                    let delta = x - mean[(i, j)];
                    mean[(i, j)] += delta / n;
                    m2[(i, j)] += delta * (x - mean[(i, j)]);
                }
            }
        }
        self.phi_draws.push(state.phi.clone());
    }

    pub fn phi_acceptance_rate(&self) -> Option<f64> {
        if self.phi_proposals == 0 {
            None
        } else {
            Some(self.phi_accepts as f64 / self.phi_proposals as f64)
        }
    }

    /// Sample variance of a precision entry across retained draws.
    pub fn omega_variance(&self, k: usize, i: usize, j: usize) -> f64 {
        if self.n_kept < 2 {
            0.0
        } else {
            self.omega_m2[k][(i, j)] / (self.n_kept as f64 - 1.0)
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.k == other.k && self.p == other.p
    }
}
