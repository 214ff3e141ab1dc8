//! Edge-pattern cache. Within a sweep, the K-variate prior covariance of an
//! edge depends only on the K inclusion bits at that edge, so all 2^K
//! covariances (with their inverses, log-determinants, and per-group
//! conditional coefficients) are computed once per sweep and looked up by bit
//! pattern in the column and graph updates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{theta_matrix, Hyperparameters};

/// Largest group count for which the dense 2^K cache is built. The joint model
/// targets single-digit K; this bound keeps the cache a few megabytes.
pub const MAX_GROUPS: usize = 12;

/// Conditional prior of one group's precision entry given the other groups'
/// entries at the same edge: `omega_k | omega_{-k} ~ N(m, tau2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeConditional {
    pub m: f64,
    pub tau2: f64,
}

/// Conditional mean and variance of coordinate `k` of a zero-mean K-variate
/// normal with covariance `theta`, given the remaining coordinates of
/// `omega_edge`. Uses the precision form: tau2 = 1/Q_kk, m = -sum_{l!=k}
/// Q_kl omega_l / Q_kk with Q = theta^{-1}.
pub fn edge_conditional(k: usize, omega_edge: &[f64], theta: &DMatrix<f64>) -> Result<EdgeConditional> {
    let kk = theta.nrows();
    if theta.ncols() != kk || omega_edge.len() != kk || k >= kk {
        return Err(Error::Dimension(format!(
            "edge_conditional: k={k}, |omega|={}, theta {}x{}",
            omega_edge.len(),
            kk,
            theta.ncols()
        )));
    }
    let q = linalg::spd_inverse(theta).map_err(|_| {
        Error::NotPositiveDefinite("theta in edge_conditional (corrupted state?)".into())
    })?;
    let qkk = q[(k, k)];
    let mut m = 0.0;
    for l in 0..kk {
        if l != k {
            m -= q[(k, l)] / qkk * omega_edge[l];
        }
    }
    Ok(EdgeConditional { m, tau2: 1.0 / qkk })
}

/// Everything the updates need about one inclusion pattern.
#[derive(Debug, Clone)]
pub struct PatternInfo {
    pub theta: DMatrix<f64>,
    pub theta_inv: DMatrix<f64>,
    pub log_det: f64,
    /// Row k holds the conditional-mean coefficients for group k; entry (k, k)
    /// is zero so `m_k = sum_l coef[(k,l)] * omega_l` needs no index skipping.
    pub coef: DMatrix<f64>,
    pub tau2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PatternTable {
    k: usize,
    patterns: Vec<PatternInfo>,
}

impl PatternTable {
    pub fn build(phi: &DMatrix<f64>, hyper: &Hyperparameters) -> Result<Self> {
        let k = phi.nrows();
        if k > MAX_GROUPS {
            return Err(Error::InvalidArgument(format!(
                "{k} groups exceeds the supported maximum of {MAX_GROUPS}"
            )));
        }
        let mut patterns = Vec::with_capacity(1 << k);
        let mut bits_buf = vec![0u8; k];
        for bits in 0..(1usize << k) {
            for (g, b) in bits_buf.iter_mut().enumerate() {
                *b = ((bits >> g) & 1) as u8;
            }
            let theta = theta_matrix(&bits_buf, hyper, phi);
            let l = linalg::cholesky(&theta).map_err(|_| {
                Error::NotPositiveDefinite(format!("theta for pattern {bits:b}"))
            })?;
            let log_det = linalg::log_det_from_chol(&l);
            let theta_inv = linalg::spd_inverse(&theta)?;
            let mut coef = DMatrix::<f64>::zeros(k, k);
            let mut tau2 = Vec::with_capacity(k);
            for g in 0..k {
                let qgg = theta_inv[(g, g)];
                tau2.push(1.0 / qgg);
                for l2 in 0..k {
                    if l2 != g {
                        coef[(g, l2)] = -theta_inv[(g, l2)] / qgg;
                    }
                }
            }
            patterns.push(PatternInfo { theta, theta_inv, log_det, coef, tau2 });
        }
        Ok(PatternTable { k, patterns })
    }

    #[inline]
    pub fn get(&self, bits: usize) -> &PatternInfo {
        &self.patterns[bits]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Quadratic form `omega^T theta^{-1} omega` for the given pattern.
    #[inline]
    pub fn quad_form(&self, bits: usize, omega: &[f64]) -> f64 {
        let inv = &self.patterns[bits].theta_inv;
        let k = self.k;
        let mut acc = 0.0;
        for b in 0..k {
            let ob = omega[b];
            if ob != 0.0 {
                let mut col = 0.0;
                for a in 0..k {
                    col += inv[(a, b)] * omega[a];
                }
                acc += col * ob;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hyper() -> Hyperparameters {
        Hyperparameters::new(0.02, 0.3, 1.0, 0.1).unwrap()
    }

    #[test]
    fn identity_phi_gives_independent_conditionals() {
        let theta = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.09, 0.0004, 0.09]));
        let ec = edge_conditional(1, &[0.5, -0.2, 0.1], &theta).unwrap();
        assert_abs_diff_eq!(ec.m, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ec.tau2, 0.0004, epsilon = 1e-14);
    }

    #[test]
    fn bivariate_formula() {
        let (a, b, c) = (0.04, 0.09, 0.027);
        let theta = DMatrix::from_row_slice(2, 2, &[a, c, c, b]);
        let w = -0.4;
        let ec = edge_conditional(0, &[123.0, w], &theta).unwrap();
        assert_abs_diff_eq!(ec.m, c / b * w, epsilon = 1e-12);
        assert_abs_diff_eq!(ec.tau2, a - c * c / b, epsilon = 1e-12);
    }

    #[test]
    fn table_matches_direct_conditional() {
        let h = hyper();
        let phi = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.55, 0.3, 0.55, 1.0, 0.45, 0.3, 0.45, 1.0],
        );
        let table = PatternTable::build(&phi, &h).unwrap();
        let omega = [0.21, -0.35, 0.07];
        for bits in 0..8usize {
            let pat = table.get(bits);
            for k in 0..3 {
                let ec = edge_conditional(k, &omega, &pat.theta).unwrap();
                let m_table: f64 = (0..3).map(|l| pat.coef[(k, l)] * omega[l]).sum();
                assert_abs_diff_eq!(m_table, ec.m, epsilon = 1e-12);
                assert_abs_diff_eq!(pat.tau2[k], ec.tau2, epsilon = 1e-12);
            }
            // Quadratic form against explicit inverse multiplication.
            let inv = linalg::spd_inverse(&pat.theta).unwrap();
            let ov = nalgebra::DVector::from_row_slice(&omega);
            let expect = (ov.transpose() * inv * &ov)[(0, 0)];
            assert_abs_diff_eq!(table.quad_form(bits, &omega), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_too_many_groups() {
        let k = MAX_GROUPS + 1;
        let phi = DMatrix::identity(k, k);
        assert!(PatternTable::build(&phi, &hyper()).is_err());
    }

    proptest! {
        // tau2 is positive and bounded by max(v0^2, v1^2) * lambda_max(Phi).
        #[test]
        fn tau2_bounds(rho1 in -0.6f64..0.6, rho2 in -0.6f64..0.6, bits in 0usize..8) {
            let h = hyper();
            let phi = DMatrix::from_row_slice(3, 3, &[
                1.0, rho1, rho2,
                rho1, 1.0, rho1 * rho2,
                rho2, rho1 * rho2, 1.0,
            ]);
            // This construction (rho_13 = rho_12 * rho_23) is always PD for |rho|<1.
            prop_assume!(linalg::is_positive_definite(&phi));
            let table = PatternTable::build(&phi, &h).unwrap();
            let lam_max = phi.clone().symmetric_eigen().eigenvalues.amax();
            let bound = h.v1 * h.v1 * lam_max;
            for k in 0..3 {
                let t2 = table.get(bits).tau2[k];
                prop_assert!(t2 > 0.0);
                prop_assert!(t2 <= bound + 1e-12);
            }
        }

        // The conditional matches a dense solve on random PD thetas.
        #[test]
        fn conditional_matches_partition_formula(
            seedless in proptest::array::uniform3(-0.5f64..0.5),
            omega in proptest::array::uniform3(-1.0f64..1.0),
        ) {
            let [r12, r13, r23] = seedless;
            let phi = DMatrix::from_row_slice(3, 3, &[1.0, r12, r13, r12, 1.0, r23, r13, r23, 1.0]);
            prop_assume!(linalg::is_positive_definite(&phi));
            let h = hyper();
            let theta = theta_matrix(&[1, 0, 1], &h, &phi);
            for k in 0..3 {
                let ec = edge_conditional(k, &omega, &theta).unwrap();
                // Partition form: m = Theta_{k,-k} Theta_{-k,-k}^{-1} omega_{-k}.
                let others: Vec<usize> = (0..3).filter(|&l| l != k).collect();
                let t_sub = DMatrix::from_fn(2, 2, |a, b| theta[(others[a], others[b])]);
                let t_cross = nalgebra::DVector::from_fn(2, |a, _| theta[(k, others[a])]);
                let w_sub = nalgebra::DVector::from_fn(2, |a, _| omega[others[a]]);
                let sol = linalg::spd_inverse(&t_sub).unwrap() * &w_sub;
                let m = t_cross.dot(&sol);
                let tau2 = theta[(k, k)]
                    - t_cross.dot(&(linalg::spd_inverse(&t_sub).unwrap() * &t_cross));
                prop_assert!((ec.m - m).abs() < 1e-10);
                prop_assert!((ec.tau2 - tau2).abs() < 1e-10);
            }
        }
    }
}
