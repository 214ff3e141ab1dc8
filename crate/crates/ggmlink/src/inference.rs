//! Posterior summarization: pooled inclusion probabilities, median-model
//! graph selection, the correlation-matrix point estimate, Gelman-Rubin
//! diagnostics, and cross-group edge-overlap tables.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{validate_correlation, ChainOutput};

/// Pooled posterior inclusion probabilities across chains:
/// `sum(edge_counts) / sum(n_kept)` elementwise.
pub fn ppi(outputs: &[ChainOutput]) -> Result<Vec<DMatrix<f64>>> {
    let first = outputs.first().ok_or_else(|| Error::InvalidArgument("no chain outputs".into()))?;
    if outputs.iter().any(|o| !o.same_shape(first)) {
        return Err(Error::Dimension("chain outputs have mismatched shapes".into()));
    }
    let total_kept: usize = outputs.iter().map(|o| o.n_kept).sum();
    if total_kept == 0 {
        return Err(Error::InvalidArgument("no retained iterations".into()));
    }
    let (k, p) = (first.k, first.p);
    let mut result = Vec::with_capacity(k);
    for g in 0..k {
        let mut m = DMatrix::<f64>::zeros(p, p);
        for o in outputs {
            for c in 0..p {
                for r in 0..p {
                    m[(r, c)] += o.edge_counts[g][(r, c)] as f64;
                }
            }
        }
        m /= total_kept as f64;
        result.push(m);
    }
    Ok(result)
}

/// Median-model selection: include an edge iff its PPI is >= `threshold`
/// (ties at the threshold are included).
pub fn median_model(ppis: &[DMatrix<f64>], threshold: f64) -> Vec<DMatrix<u8>> {
    ppis.iter()
        .map(|m| {
            let p = m.nrows();
            let mut g = DMatrix::<u8>::zeros(p, p);
            for j in 0..p {
                for i in 0..p {
                    if i != j && m[(i, j)] >= threshold {
                        g[(i, j)] = 1;
                    }
                }
            }
            g
        })
        .collect()
}

/// Entrywise posterior mean of the correlation draws; projected back onto the
/// correlation cone (eigenvalue clip at 1e-8, unit-diagonal rescale) in the
/// rare case the mean itself fails the validity check.
pub fn phi_estimate(phi_draws: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let first = phi_draws
        .first()
        .ok_or_else(|| Error::InvalidArgument("no phi draws".into()))?;
    let k = first.nrows();
    let mut mean = DMatrix::<f64>::zeros(k, k);
    for d in phi_draws {
        if d.nrows() != k || d.ncols() != k {
            return Err(Error::Dimension("phi draw shape mismatch".into()));
        }
        mean += d;
    }
    mean /= phi_draws.len() as f64;
    for i in 0..k {
        mean[(i, i)] = 1.0;
    }
    linalg::symmetrize(&mut mean);
    if validate_correlation(&mean).is_ok() {
        return Ok(mean);
    }
    let projected = linalg::nearest_correlation_clip(&mean, 1e-8)?;
    validate_correlation(&projected)?;
    Ok(projected)
}

/// Classic potential scale reduction factor over >= 2 equally long chains:
/// `sqrt(((n-1)/n W + B/n) / W)` with W the mean within-chain sample variance
/// and B = n * variance of the chain means. Zero within-chain variance with
/// disagreeing means returns the +infinity sentinel; fully constant chains are
/// converged by definition and return 1.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("gelman_rubin needs >= 2 chains".into()));
    }
    let n = chains[0].len();
    if n < 10 {
        return Err(Error::InvalidArgument("gelman_rubin needs chains of length >= 10".into()));
    }
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("gelman_rubin chains have unequal lengths".into()));
    }
    let moments: Vec<(f64, f64)> = chains
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n as f64;
            let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            (mean, var)
        })
        .collect();
    Ok(rhat_from_parts(&moments, n))
}

// helper kept separate so streaming moments reuse the same arithmetic
fn rhat_from_parts(per_chain: &[(f64, f64)], n: usize) -> f64 {
    let m = per_chain.len() as f64;
    let nf = n as f64;
    let w = per_chain.iter().map(|&(_, v)| v).sum::<f64>() / m;
    let grand = per_chain.iter().map(|&(mu, _)| mu).sum::<f64>() / m;
    let b = nf * per_chain.iter().map(|&(mu, _)| (mu - grand).powi(2)).sum::<f64>() / (m - 1.0);
    if w <= 0.0 {
        return if b <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((nf - 1.0) / nf * w + b / nf) / w).sqrt()
}

/// R-hat from per-chain streaming moments (mean, sample variance) with a
/// common retained length; used for precision entries where trajectories are
/// not stored.
pub fn gelman_rubin_from_moments(per_chain: &[(f64, f64)], n: usize) -> Result<f64> {
    if per_chain.len() < 2 {
        return Err(Error::InvalidArgument("need >= 2 chains".into()));
    }
    if n < 10 {
        return Err(Error::InvalidArgument("need n >= 10".into()));
    }
    Ok(rhat_from_parts(per_chain, n))
}

/// R-hat for every monitored parameter across chains: all off-diagonal Phi
/// entries (from stored draws) and all strict upper-triangle precision entries
/// (from streaming moments). Keys: `phi[a,b]` and `omega[k][i,j]`.
pub fn rhat_report(outputs: &[ChainOutput]) -> Result<BTreeMap<String, f64>> {
    let first = outputs.first().ok_or_else(|| Error::InvalidArgument("no chain outputs".into()))?;
    if outputs.len() < 2 {
        return Err(Error::InvalidArgument("diagnostics need >= 2 chains".into()));
    }
    if outputs.iter().any(|o| !o.same_shape(first) || o.n_kept != first.n_kept) {
        return Err(Error::Dimension("chains differ in shape or retained count".into()));
    }
    let n = first.n_kept;
    let mut report = BTreeMap::new();
    for b in 0..first.k {
        for a in 0..b {
            let chains: Vec<Vec<f64>> = outputs
                .iter()
                .map(|o| o.phi_draws.iter().map(|d| d[(a, b)]).collect())
                .collect();
            report.insert(format!("phi[{a},{b}]"), gelman_rubin(&chains)?);
        }
    }
    for g in 0..first.k {
        for j in 0..first.p {
            for i in 0..j {
                let parts: Vec<(f64, f64)> = outputs
                    .iter()
                    .map(|o| (o.omega_mean[g][(i, j)], o.omega_variance(g, i, j)))
                    .collect();
                report.insert(
                    format!("omega[{g}][{i},{j}]"),
                    gelman_rubin_from_moments(&parts, n)?,
                );
            }
        }
    }
    Ok(report)
}

/// Minimum pairwise Pearson correlation between per-chain PPI vectors (all
/// groups' upper-triangle entries stacked). `None` for a single chain or
/// degenerate PPIs.
pub fn ppi_cross_chain_correlation(outputs: &[ChainOutput]) -> Option<f64> {
    if outputs.len() < 2 {
        return None;
    }
    let vectors: Vec<Vec<f64>> = outputs
        .iter()
        .map(|o| {
            let mut v = Vec::new();
            for g in 0..o.k {
                for j in 0..o.p {
                    for i in 0..j {
                        v.push(o.edge_counts[g][(i, j)] as f64 / o.n_kept.max(1) as f64);
                    }
                }
            }
            v
        })
        .collect();
    let mut min_corr = f64::INFINITY;
    for a in 0..vectors.len() {
        for b in (a + 1)..vectors.len() {
            min_corr = min_corr.min(linalg::pearson(&vectors[a], &vectors[b])?);
        }
    }
    Some(min_corr)
}

/// Cross-group edge-overlap table: diagonal = edges per group, off-diagonal =
/// shared edges, plus the count of edges unique to each group. An optional
/// variable subset restricts to edges with both endpoints inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapTable {
    pub counts: DMatrix<usize>,
    pub unique: Vec<usize>,
}

pub fn edge_overlap_table(
    selected: &[DMatrix<u8>],
    subset: Option<&[usize]>,
) -> Result<OverlapTable> {
    let k = selected.len();
    let first = selected.first().ok_or_else(|| Error::InvalidArgument("no graphs".into()))?;
    let p = first.nrows();
    if selected.iter().any(|g| g.nrows() != p || g.ncols() != p) {
        return Err(Error::Dimension("graphs have mismatched shapes".into()));
    }
    let in_subset: Vec<bool> = match subset {
        None => vec![true; p],
        Some(idx) => {
            let mut mask = vec![false; p];
            for &i in idx {
                if i >= p {
                    return Err(Error::InvalidArgument(format!(
                        "subset index {i} out of range for p={p}"
                    )));
                }
                mask[i] = true;
            }
            mask
        }
    };
    let mut counts = DMatrix::<usize>::zeros(k, k);
    let mut unique = vec![0usize; k];
    for j in 0..p {
        for i in 0..j {
            if !(in_subset[i] && in_subset[j]) {
                continue;
            }
            let present: Vec<bool> = selected.iter().map(|g| g[(i, j)] == 1).collect();
            let total = present.iter().filter(|&&b| b).count();
            for a in 0..k {
                if present[a] {
                    counts[(a, a)] += 1;
                    if total == 1 {
                        unique[a] += 1;
                    }
                    for b in 0..k {
                        if b != a && present[b] {
                            counts[(a, b)] += 1;
                        }
                    }
                }
            }
        }
    }
    // counted (a,b) and (b,a) separately above; each pair was incremented once
    // per direction, so the matrix is already symmetric.
    Ok(OverlapTable { counts, unique })
}

/// Full posterior summary in one struct. `omega_hat` starts as the pooled
/// posterior mean of the precision draws (mixed over graphs); callers running
/// the conditional resampling step replace it with the resampled estimate.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub ppi: Vec<DMatrix<f64>>,
    pub selected_graphs: Vec<DMatrix<u8>>,
    pub phi_hat: DMatrix<f64>,
    pub omega_hat: Vec<DMatrix<f64>>,
    pub rhat: BTreeMap<String, f64>,
    pub ppi_cross_chain: Option<f64>,
    pub n_kept_total: usize,
    pub n_chains: usize,
}

pub fn summarize(outputs: &[ChainOutput], threshold: f64) -> Result<PosteriorSummary> {
    let first = outputs.first().ok_or_else(|| Error::InvalidArgument("no chain outputs".into()))?;
    let ppis = ppi(outputs)?;
    let selected = median_model(&ppis, threshold);
    let all_phi: Vec<DMatrix<f64>> =
        outputs.iter().flat_map(|o| o.phi_draws.iter().cloned()).collect();
    let phi_hat = phi_estimate(&all_phi)?;
    let total_kept: usize = outputs.iter().map(|o| o.n_kept).sum();
    // Pooled mean weighted by retained counts.
    let mut omega_hat: Vec<DMatrix<f64>> = Vec::with_capacity(first.k);
    for g in 0..first.k {
        let mut acc = DMatrix::<f64>::zeros(first.p, first.p);
        for o in outputs {
            acc += &o.omega_mean[g] * (o.n_kept as f64 / total_kept as f64);
        }
        omega_hat.push(acc);
    }
    let rhat = if outputs.len() >= 2 && outputs.iter().all(|o| o.n_kept == first.n_kept) {
        rhat_report(outputs)?
    } else {
        BTreeMap::new()
    };
    Ok(PosteriorSummary {
        ppi: ppis,
        selected_graphs: selected,
        phi_hat,
        omega_hat,
        rhat,
        ppi_cross_chain: ppi_cross_chain_correlation(outputs),
        n_kept_total: total_kept,
        n_chains: outputs.len(),
    })
}
