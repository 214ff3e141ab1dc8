//! Per-group updates: the column-partition Gibbs draw for one row/column of a
//! precision matrix, and the per-edge Bernoulli update of one group's graph.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ChainState, GroupDataset, Hyperparameters};

use super::patterns::PatternTable;

/// Preallocated scratch for the column update. `sigma` holds the running
/// inverses of the precision matrices, refreshed at sweep start and maintained
/// exactly through each column update via the block-inverse identities.
#[derive(Debug)]
pub(crate) struct Workspace {
    pub sigma: Vec<DMatrix<f64>>,
    /// Inverse of the (p-1)x(p-1) principal submatrix of the current omega.
    b: DMatrix<f64>,
    /// Conditional precision matrix, overwritten by its Cholesky factor.
    c: DMatrix<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
    z: Vec<f64>,
    rhs: Vec<f64>,
    prec: Vec<f64>,
    omega_edge: Vec<f64>,
}

impl Workspace {
    pub fn new(k: usize, p: usize) -> Self {
        let q = p.saturating_sub(1).max(1);
        Workspace {
            sigma: (0..k).map(|_| DMatrix::identity(p, p)).collect(),
            b: DMatrix::zeros(q, q),
            c: DMatrix::zeros(q, q),
            u: vec![0.0; q],
            w: vec![0.0; q],
            z: vec![0.0; q],
            rhs: vec![0.0; q],
            prec: vec![0.0; q],
            omega_edge: vec![0.0; k],
        }
    }

    /// Recomputes every sigma from the current omegas (Cholesky inversion).
    /// Called once per sweep to stop floating-point drift from accumulating
    /// through the incremental column updates.
    pub fn refresh_sigma(&mut self, state: &ChainState) -> Result<()> {
        for (k, om) in state.omega.iter().enumerate() {
            self.sigma[k] = linalg::spd_inverse(om).map_err(|_| {
                Error::NotPositiveDefinite(format!("omega[{k}] during sigma refresh"))
            })?;
        }
        Ok(())
    }
}

#[inline]
fn partner(a: usize, j: usize) -> usize {
    if a < j {
        a
    } else {
        a + 1
    }
}

/// Draws row/column `j` of `Omega_k` from its full conditional.
///
/// With column j partitioned last, the off-diagonal block u has conditional
/// covariance `C = [(s_jj + lambda) B + V^{-1}]^{-1}` and mean
/// `C (V^{-1} m - s_{-j,j})`, where `B = (Omega_{-j,-j})^{-1}`, and V, m stack
/// the per-partner conditional prior variances/means given the other groups'
/// entries. The diagonal becomes `gamma + u^T B u`, gamma ~ Gamma(n/2 + 1,
/// rate (s_jj + lambda)/2), which keeps the matrix positive definite for any
/// gamma > 0. The cached inverse is updated by the matching block identities.
pub(crate) fn update_column<R: Rng>(
    k: usize,
    j: usize,
    state: &mut ChainState,
    data: &GroupDataset,
    hyper: &Hyperparameters,
    patterns: &PatternTable,
    ws: &mut Workspace,
    rng: &mut R,
) -> Result<()> {
    let p = state.p();
    let kk = state.k();
    let q = p - 1;
    let s_k = &data.group(k).scatter;
    let n_k = data.group(k).n;
    let s_jj = s_k[(j, j)];
    let shrink = s_jj + hyper.lambda;

    // B = Sigma_{-j,-j} - sigma_{-j,j} sigma_{j,-j} / sigma_jj, the inverse of
    // Omega_{-j,-j} by the Schur complement of the cached full inverse.
    {
        let sigma = &ws.sigma[k];
        let sjj = sigma[(j, j)];
        for b_col in 0..q {
            let cb = partner(b_col, j);
            let scale = sigma[(cb, j)] / sjj;
            for a_row in 0..q {
                let ca = partner(a_row, j);
                ws.b[(a_row, b_col)] = sigma[(ca, cb)] - sigma[(ca, j)] * scale;
            }
        }
    }

    // Conditional prior for each partner entry given the other groups, and the
    // Gaussian natural parameters of the column conditional.
    for a in 0..q {
        let i = partner(a, j);
        let bits = state.edge_bits(i, j);
        let pat = patterns.get(bits);
        for (l, slot) in ws.omega_edge.iter_mut().enumerate() {
            *slot = state.omega[l][(i, j)];
        }
        let coef_row = &pat.coef;
        let mut m = 0.0;
        for l in 0..kk {
            m += coef_row[(k, l)] * ws.omega_edge[l];
        }
        let prec = 1.0 / pat.tau2[k];
        ws.prec[a] = prec;
        ws.rhs[a] = prec * m - s_k[(i, j)];
    }

    // C^{-1} = shrink * B + diag(prec); factor in place.
    for b_col in 0..q {
        for a_row in 0..q {
            ws.c[(a_row, b_col)] = shrink * ws.b[(a_row, b_col)];
        }
        ws.c[(b_col, b_col)] += ws.prec[b_col];
    }
    linalg::chol_lower_in_place(&mut ws.c, q).map_err(|_| Error::NotPositiveDefinite(format!(
        "column conditional (group {k}, column {j})"
    )))?;

    // Mean via two triangular solves, then add L^{-T} z for the draw.
    ws.u[..q].copy_from_slice(&ws.rhs[..q]);
    linalg::solve_lower_in_place(&ws.c, &mut ws.u, q);
    linalg::solve_lower_transpose_in_place(&ws.c, &mut ws.u, q);
    for z in ws.z[..q].iter_mut() {
        *z = StandardNormal.sample(rng);
    }
    linalg::solve_lower_transpose_in_place(&ws.c, &mut ws.z, q);
    for a in 0..q {
        ws.u[a] += ws.z[a];
    }

    let gamma_dist = Gamma::new(n_k as f64 / 2.0 + 1.0, 2.0 / shrink)
        .map_err(|e| Error::InvalidArgument(format!("gamma params: {e}")))?;
    let gamma: f64 = gamma_dist.sample(rng);

    // w = B u, quadratic form, and the state + cached-inverse writes.
    linalg::matvec_leading(&ws.b, &ws.u, &mut ws.w, q);
    let mut quad = 0.0;
    for a in 0..q {
        quad += ws.u[a] * ws.w[a];
    }

    let omega = &mut state.omega[k];
    for a in 0..q {
        let i = partner(a, j);
        omega[(i, j)] = ws.u[a];
        omega[(j, i)] = ws.u[a];
    }
    omega[(j, j)] = gamma + quad;

    // Sigma_k for the new column: Schur complement is exactly gamma.
    let sigma = &mut ws.sigma[k];
    let inv_gamma = 1.0 / gamma;
    for b_col in 0..q {
        let cb = partner(b_col, j);
        let wb = ws.w[b_col];
        for a_row in 0..q {
            let ca = partner(a_row, j);
            sigma[(ca, cb)] = ws.b[(a_row, b_col)] + ws.w[a_row] * wb * inv_gamma;
        }
    }
    for a in 0..q {
        let i = partner(a, j);
        let v = -ws.w[a] * inv_gamma;
        sigma[(i, j)] = v;
        sigma[(j, i)] = v;
    }
    sigma[(j, j)] = inv_gamma;

    Ok(())
}

/// Redraws every edge indicator of group k from its Bernoulli full
/// conditional: odds = pi/(1-pi) times the ratio of the K-variate normal
/// densities of the current edge vector under the included/excluded pattern.
pub(crate) fn update_graph<R: Rng>(
    k: usize,
    state: &mut ChainState,
    hyper: &Hyperparameters,
    patterns: &PatternTable,
    ws: &mut Workspace,
    rng: &mut R,
) {
    let p = state.p();
    let kk = state.k();
    let logit_pi = (hyper.pi / (1.0 - hyper.pi)).ln();
    let bit = 1usize << k;
    for j in 0..p {
        for i in 0..j {
            let bits = state.edge_bits(i, j);
            let b0 = bits & !bit;
            let b1 = bits | bit;
            for (l, slot) in ws.omega_edge.iter_mut().enumerate() {
                *slot = state.omega[l][(i, j)];
            }
            let q0 = patterns.quad_form(b0, &ws.omega_edge);
            let q1 = patterns.quad_form(b1, &ws.omega_edge);
            let ld0 = patterns.get(b0).log_det;
            let ld1 = patterns.get(b1).log_det;
            let log_odds = logit_pi + 0.5 * (ld0 - ld1) + 0.5 * (q0 - q1);
            // P(g=1) = sigmoid(log_odds); sample without forming exp overflow.
            let u: f64 = rng.gen();
            let include = (u / (1.0 - u)).ln() < log_odds;
            let g = u8::from(include);
            state.graphs[k][(i, j)] = g;
            state.graphs[k][(j, i)] = g;
        }
    }
    let _ = kk;
}
