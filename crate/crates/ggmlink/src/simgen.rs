//! Ground-truth generators for simulation studies: community scale-free
//! graphs, cross-group edge perturbations, precision-matrix filling with a
//! diagonal-dominance adjustment, and Gaussian data sampling.
//!
//! Everything here is a pure function of its inputs and the RNG stream, so a
//! scenario is reproducible from `(ScenarioSpec, seed)` alone.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// How each group's graph after the first derives from its predecessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupDerivation {
    /// Remove `n_remove` edges and add `n_add` new ones; the filled matrix is
    /// edited accordingly and re-adjusted for positive definiteness.
    Perturb { n_remove: usize, n_add: usize },
    /// Remove `n` edges by zeroing the corresponding precision entries of the
    /// predecessor; no re-fill and no re-adjustment (zeroing preserves
    /// diagonal dominance).
    Remove { n: usize },
}

/// Parameters for a multi-group scenario. The number of groups is one more
/// than the number of derivation steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_communities: usize,
    pub community_size: usize,
    pub n_per_group: usize,
    pub derivations: Vec<GroupDerivation>,
    pub seed: u64,
}

impl ScenarioSpec {
    /// The three-group benchmark design: p = 100 variables in five
    /// communities of twenty, n = 150 observations per group, group 2 a
    /// five-out/five-in perturbation of group 1, group 3 a twenty-edge
    /// deletion from group 2.
    pub fn default_three_group(seed: u64) -> Self {
        Self {
            n_communities: 5,
            community_size: 20,
            n_per_group: 150,
            derivations: vec![
                GroupDerivation::Perturb { n_remove: 5, n_add: 5 },
                GroupDerivation::Remove { n: 20 },
            ],
            seed,
        }
    }

    pub fn n_groups(&self) -> usize {
        self.derivations.len() + 1
    }

    pub fn n_vars(&self) -> usize {
        self.n_communities * self.community_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_communities < 1 {
            return Err(Error::InvalidArgument("need at least one community".into()));
        }
        if self.community_size < 2 {
            return Err(Error::InvalidArgument("community size must be >= 2".into()));
        }
        if self.n_per_group < 2 {
            return Err(Error::InvalidArgument("need at least two observations per group".into()));
        }
        Ok(())
    }
}

/// Edge changes applied when deriving one group's graph from its predecessor.
/// Endpoints are 0-based with `i < j`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepProvenance {
    /// Index of the derived group (0-based).
    pub group: usize,
    pub removed: Vec<(usize, usize)>,
    pub added: Vec<(usize, usize)>,
}

/// A complete synthetic scenario: truth plus sampled data.
#[derive(Debug, Clone)]
pub struct SimScenario {
    pub k: usize,
    pub p: usize,
    pub true_graphs: Vec<DMatrix<u8>>,
    pub true_omegas: Vec<DMatrix<f64>>,
    /// One n x p observation matrix per group (rows are observations).
    pub datasets: Vec<DMatrix<f64>>,
    pub seed: u64,
    pub provenance: Vec<StepProvenance>,
}

/// Block-diagonal adjacency of `n_comm` disjoint preferential-attachment
/// trees, each over `comm_size` nodes: every new node attaches one edge to an
/// existing node of its community with probability proportional to current
/// degree.
pub fn scale_free_community_graph(
    n_comm: usize,
    comm_size: usize,
    rng: &mut impl Rng,
) -> Result<DMatrix<u8>> {
    if n_comm < 1 || comm_size < 2 {
        return Err(Error::InvalidArgument(
            "scale_free_community_graph needs n_comm >= 1 and comm_size >= 2".into(),
        ));
    }
    let p = n_comm * comm_size;
    let mut graph = DMatrix::<u8>::zeros(p, p);
    // Degree-proportional sampling via the repeated-endpoint list: each node
    // appears once per unit of degree, so a uniform pick is a
    // preferential-attachment pick.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * (comm_size - 1));
    for c in 0..n_comm {
        let base = c * comm_size;
        endpoints.clear();
        for v in (base + 1)..(base + comm_size) {
            let target = if endpoints.is_empty() {
                base
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            graph[(v, target)] = 1;
            graph[(target, v)] = 1;
            endpoints.push(v);
            endpoints.push(target);
        }
    }
    Ok(graph)
}

/// Upper-triangle edge list (i < j) of a symmetric binary adjacency.
pub fn edge_list(graph: &DMatrix<u8>) -> Vec<(usize, usize)> {
    let p = graph.nrows();
    let mut edges = Vec::new();
    for j in 0..p {
        for i in 0..j {
            if graph[(i, j)] == 1 {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Number of edges (upper triangle) in a symmetric binary adjacency.
pub fn edge_count(graph: &DMatrix<u8>) -> usize {
    let p = graph.nrows();
    (0..p).map(|j| (0..j).filter(|&i| graph[(i, j)] == 1).count()).sum()
}

fn set_edge(graph: &mut DMatrix<u8>, (i, j): (usize, usize), value: u8) {
    graph[(i, j)] = value;
    graph[(j, i)] = value;
}

/// Remove `n_remove` uniformly chosen existing edges and add `n_add`
/// uniformly chosen absent edges (additions may cross communities).
pub fn perturb_graph(
    graph: &DMatrix<u8>,
    n_remove: usize,
    n_add: usize,
    rng: &mut impl Rng,
) -> Result<(DMatrix<u8>, StepProvenance)> {
    let p = graph.nrows();
    let edges = edge_list(graph);
    let mut absent = Vec::new();
    for j in 0..p {
        for i in 0..j {
            if graph[(i, j)] == 0 {
                absent.push((i, j));
            }
        }
    }
    if edges.len() < n_remove {
        return Err(Error::InvalidArgument(format!(
            "cannot remove {n_remove} edges from a graph with {}",
            edges.len()
        )));
    }
    if absent.len() < n_add {
        return Err(Error::InvalidArgument(format!(
            "cannot add {n_add} edges with only {} absent pairs",
            absent.len()
        )));
    }
    let mut removed: Vec<(usize, usize)> =
        edges.choose_multiple(rng, n_remove).copied().collect();
    let mut added: Vec<(usize, usize)> = absent.choose_multiple(rng, n_add).copied().collect();
    removed.sort_unstable();
    added.sort_unstable();
    let mut out = graph.clone();
    for &e in &removed {
        set_edge(&mut out, e, 0);
    }
    for &e in &added {
        set_edge(&mut out, e, 1);
    }
    Ok((out, StepProvenance { group: 0, removed, added }))
}

/// Remove `n` uniformly chosen edges without replacement.
pub fn remove_edges(
    graph: &DMatrix<u8>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<(DMatrix<u8>, StepProvenance)> {
    let edges = edge_list(graph);
    if edges.len() < n {
        return Err(Error::InvalidArgument(format!(
            "cannot remove {n} edges from a graph with {}",
            edges.len()
        )));
    }
    let mut removed: Vec<(usize, usize)> = edges.choose_multiple(rng, n).copied().collect();
    removed.sort_unstable();
    let mut out = graph.clone();
    for &e in &removed {
        set_edge(&mut out, e, 0);
    }
    Ok((out, StepProvenance { group: 0, removed, added: Vec::new() }))
}

/// One draw from the two-interval edge-weight law: magnitude uniform on
/// [0.4, 0.6], sign by fair coin.
fn edge_weight(rng: &mut impl Rng) -> f64 {
    let magnitude = rng.gen_range(0.4..0.6);
    if rng.gen::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Unit-diagonal symmetric matrix with edge entries drawn independently from
/// the uniform distribution on [-0.6, -0.4] U [0.4, 0.6] and exact zeros
/// elsewhere.
pub fn fill_precision(graph: &DMatrix<u8>, rng: &mut impl Rng) -> DMatrix<f64> {
    let p = graph.nrows();
    let mut m = DMatrix::<f64>::identity(p, p);
    for j in 0..p {
        for i in 0..j {
            if graph[(i, j)] == 1 {
                let w = edge_weight(rng);
                m[(i, j)] = w;
                m[(j, i)] = w;
            }
        }
    }
    m
}

/// Rescale off-diagonal entries into strict diagonal dominance: entry (i, j)
/// is divided by 1.5 x the larger of the two incident rows' off-diagonal
/// absolute sums (making the scaling symmetric, so the transpose-averaging
/// step is a no-op), then the diagonal is reset to one. Row sums end up at
/// most 2/3, so the output always passes Cholesky.
pub fn pd_adjust(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    if m.ncols() != p {
        return Err(Error::Dimension("pd_adjust needs a square matrix".into()));
    }
    for j in 0..p {
        if (m[(j, j)] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("pd_adjust expects a unit diagonal".into()));
        }
        for i in 0..j {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                return Err(Error::InvalidArgument("pd_adjust expects a symmetric matrix".into()));
            }
        }
    }
    let row_sums: Vec<f64> = (0..p)
        .map(|i| (0..p).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum())
        .collect();
    let mut out = m.clone();
    for j in 0..p {
        for i in 0..p {
            if i == j {
                continue;
            }
            let scale = 1.5 * row_sums[i].max(row_sums[j]);
            if scale > 0.0 {
                out[(i, j)] /= scale;
            }
        }
    }
    // Transpose averaging (kept for clarity; the max-based scale is already
    // symmetric) and diagonal reset.
    let averaged = (&out + out.transpose()) * 0.5;
    out = averaged;
    for j in 0..p {
        out[(j, j)] = 1.0;
    }
    if !linalg::is_positive_definite(&out) {
        return Err(Error::NotPositiveDefinite("pd_adjust output failed Cholesky".into()));
    }
    Ok(out)
}

/// `n` i.i.d. rows from N(0, Omega^{-1}), computed by back-solving the
/// Cholesky factor of Omega against standard normal vectors.
pub fn sample_data(omega: &DMatrix<f64>, n: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    use rand_distr::StandardNormal;
    let p = omega.nrows();
    let lower = linalg::cholesky(omega)?;
    let mut data = DMatrix::<f64>::zeros(n, p);
    let mut z = vec![0.0; p];
    for r in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        // Solve L^T x = z so that cov(x) = (L L^T)^{-1} = Omega^{-1}.
        linalg::solve_lower_transpose_in_place(&lower, &mut z, p);
        for c in 0..p {
            data[(r, c)] = z[c];
        }
    }
    Ok(data)
}

/// Exact support check: off-diagonal nonzeros of `omega` (tolerance 1e-12)
/// must coincide with the edges of `graph`.
pub fn verify_support(omega: &DMatrix<f64>, graph: &DMatrix<u8>) -> Result<()> {
    let p = graph.nrows();
    for j in 0..p {
        for i in 0..p {
            if i == j {
                continue;
            }
            let nonzero = omega[(i, j)].abs() > 1e-12;
            if nonzero != (graph[(i, j)] == 1) {
                return Err(Error::InvalidArgument(format!(
                    "support mismatch at ({i}, {j}): omega={}, edge={}",
                    omega[(i, j)],
                    graph[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// Run the full generation pipeline. Group 1 fills and adjusts its graph;
/// each `Perturb` step edits the running filled matrix (fresh weights on new
/// edges, zeros on removed ones) and re-adjusts; each `Remove` step zeroes
/// entries of the predecessor's adjusted precision directly.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<SimScenario> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let k = spec.n_groups();
    let p = spec.n_vars();

    let mut graphs: Vec<DMatrix<u8>> = Vec::with_capacity(k);
    let mut omegas: Vec<DMatrix<f64>> = Vec::with_capacity(k);
    let mut provenance: Vec<StepProvenance> = Vec::with_capacity(k - 1);

    let g1 = scale_free_community_graph(spec.n_communities, spec.community_size, &mut rng)?;
    let mut filled = fill_precision(&g1, &mut rng);
    omegas.push(pd_adjust(&filled)?);
    graphs.push(g1);

    for (step_idx, step) in spec.derivations.iter().enumerate() {
        let prev_graph = graphs.last().expect("at least one graph");
        let (next_graph, mut prov, next_omega) = match *step {
            GroupDerivation::Perturb { n_remove, n_add } => {
                let (g, prov) = perturb_graph(prev_graph, n_remove, n_add, &mut rng)?;
                for &e in &prov.removed {
                    filled[(e.0, e.1)] = 0.0;
                    filled[(e.1, e.0)] = 0.0;
                }
                for &e in &prov.added {
                    let w = edge_weight(&mut rng);
                    filled[(e.0, e.1)] = w;
                    filled[(e.1, e.0)] = w;
                }
                let omega = pd_adjust(&filled)?;
                (g, prov, omega)
            }
            GroupDerivation::Remove { n } => {
                let (g, prov) = remove_edges(prev_graph, n, &mut rng)?;
                let mut omega = omegas.last().expect("at least one omega").clone();
                for &e in &prov.removed {
                    omega[(e.0, e.1)] = 0.0;
                    omega[(e.1, e.0)] = 0.0;
                    filled[(e.0, e.1)] = 0.0;
                    filled[(e.1, e.0)] = 0.0;
                }
                if !linalg::is_positive_definite(&omega) {
                    return Err(Error::NotPositiveDefinite(
                        "edge removal broke positive definiteness".into(),
                    ));
                }
                (g, prov, omega)
            }
        };
        prov.group = step_idx + 1;
        graphs.push(next_graph);
        omegas.push(next_omega);
        provenance.push(prov);
    }

    for (graph, omega) in graphs.iter().zip(&omegas) {
        verify_support(omega, graph)?;
    }

    let mut datasets = Vec::with_capacity(k);
    for omega in &omegas {
        datasets.push(sample_data(omega, spec.n_per_group, &mut rng)?);
    }

    Ok(SimScenario {
        k,
        p,
        true_graphs: graphs,
        true_omegas: omegas,
        datasets,
        seed: spec.seed,
        provenance,
    })
}
