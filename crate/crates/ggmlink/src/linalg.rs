//! Small dense linear-algebra helpers shared by the sampler and estimators.
//!
//! The sampler's inner loop works on the leading `q x q` block of preallocated
//! column-major buffers, so the Cholesky / triangular-solve routines here take an
//! explicit active dimension instead of allocating per call.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Minimum pivot accepted by the in-place factorizations. States that get this
/// close to singular indicate a numerically broken trajectory, not a valid draw.
pub const CHOL_PIVOT_FLOOR: f64 = 1e-12;

/// In-place lower Cholesky of the leading `q x q` block of `m` (column-major).
/// On success the lower triangle of the block holds `L` with `L L^T = M`; the
/// strict upper triangle is left untouched.
pub fn chol_lower_in_place(m: &mut DMatrix<f64>, q: usize) -> Result<()> {
    debug_assert!(m.nrows() >= q && m.ncols() >= q);
    let cap = m.nrows();
    let data = m.as_mut_slice();
    for c in 0..q {
        let d = data[c + c * cap];
        if !(d.is_finite() && d > CHOL_PIVOT_FLOOR) {
            return Err(Error::NotPositiveDefinite(format!(
                "pivot {d:.3e} at column {c} of {q}"
            )));
        }
        let pivot = d.sqrt();
        data[c + c * cap] = pivot;
        for r in (c + 1)..q {
            data[r + c * cap] /= pivot;
        }
        // Right-looking update of the trailing columns keeps access contiguous.
        for t in (c + 1)..q {
            let f = data[t + c * cap];
            if f != 0.0 {
                for r in t..q {
                    data[r + t * cap] -= f * data[r + c * cap];
                }
            }
        }
    }
    Ok(())
}

/// Solves `L y = b` in place over the leading `q` entries, `L` lower triangular
/// in the leading block of `l`.
pub fn solve_lower_in_place(l: &DMatrix<f64>, b: &mut [f64], q: usize) {
    let cap = l.nrows();
    let ld = l.as_slice();
    for c in 0..q {
        let yc = b[c] / ld[c + c * cap];
        b[c] = yc;
        for r in (c + 1)..q {
            b[r] -= ld[r + c * cap] * yc;
        }
    }
}

/// Solves `L^T x = b` in place over the leading `q` entries.
pub fn solve_lower_transpose_in_place(l: &DMatrix<f64>, b: &mut [f64], q: usize) {
    let cap = l.nrows();
    let ld = l.as_slice();
    for c in (0..q).rev() {
        let mut acc = b[c];
        for r in (c + 1)..q {
            acc -= ld[r + c * cap] * b[r];
        }
        b[c] = acc / ld[c + c * cap];
    }
}

/// `w = M u` over the leading `q x q` block, accumulated column-wise.
pub fn matvec_leading(m: &DMatrix<f64>, u: &[f64], w: &mut [f64], q: usize) {
    let cap = m.nrows();
    let md = m.as_slice();
    w[..q].fill(0.0);
    for c in 0..q {
        let uc = u[c];
        if uc != 0.0 {
            let col = &md[c * cap..c * cap + q];
            for r in 0..q {
                w[r] += uc * col[r];
            }
        }
    }
}

/// Rank-one update `M += alpha * w w^T` on the leading `q x q` block.
pub fn rank_one_update_leading(m: &mut DMatrix<f64>, w: &[f64], alpha: f64, q: usize) {
    let cap = m.nrows();
    let md = m.as_mut_slice();
    for c in 0..q {
        let f = alpha * w[c];
        if f != 0.0 {
            let col = &mut md[c * cap..c * cap + q];
            for r in 0..q {
                col[r] += f * w[r];
            }
        }
    }
}

/// Symmetric part `(M + M^T) / 2`, in place.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factor of a symmetric positive definite matrix (allocating form).
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut work = m.clone();
    chol_lower_in_place(&mut work, n)?;
    // Zero the stale upper triangle so the factor can be used directly.
    for j in 1..n {
        for i in 0..j {
            work[(i, j)] = 0.0;
        }
    }
    Ok(work)
}

/// `true` iff `m` admits a Cholesky factorization (symmetric PD up to the pivot floor).
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let mut work = m.clone();
    chol_lower_in_place(&mut work, n).is_ok()
}

/// Log-determinant of `M = L L^T` given the factor `L`.
pub fn log_det_from_chol(l: &DMatrix<f64>) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

/// Inverse of an SPD matrix via its Cholesky factor.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let l = cholesky(m)?;
    let mut inv = DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        let mut col: Vec<f64> = (0..n).map(|r| inv[(r, c)]).collect();
        solve_lower_in_place(&l, &mut col, n);
        solve_lower_transpose_in_place(&l, &mut col, n);
        for r in 0..n {
            inv[(r, c)] = col[r];
        }
    }
    symmetrize(&mut inv);
    Ok(inv)
}

/// Eigenvalue-clip projection of a symmetric matrix onto the correlation
/// matrices: clip eigenvalues below `floor`, reassemble, renormalize to unit
/// diagonal. Used as a fallback when an entrywise average drifts off the cone.
pub fn nearest_correlation_clip(m: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!("{}x{} not square", n, m.ncols())));
    }
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < floor {
            *v = floor;
        }
    }
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let mut out = rebuilt.clone();
    for i in 0..n {
        let di = rebuilt[(i, i)].sqrt();
        for j in 0..n {
            let dj = rebuilt[(j, j)].sqrt();
            out[(i, j)] = rebuilt[(i, j)] / (di * dj);
        }
    }
    for i in 0..n {
        out[(i, i)] = 1.0;
    }
    symmetrize(&mut out);
    Ok(out)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Pearson correlation of two equally long slices; `None` when either side is
/// degenerate (zero variance or fewer than two points).
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spd_example() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0])
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = spd_example();
        let l = cholesky(&m).unwrap();
        let back = &l * l.transpose();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back[(i, j)], m[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky(&m).is_err());
        assert!(!is_positive_definite(&m));
    }

    #[test]
    fn leading_block_factorization_ignores_tail() {
        // Fill a 5x5 buffer with garbage outside the leading 3x3 block.
        let mut buf = DMatrix::from_element(5, 5, f64::NAN);
        let m = spd_example();
        for i in 0..3 {
            for j in 0..3 {
                buf[(i, j)] = m[(i, j)];
            }
        }
        chol_lower_in_place(&mut buf, 3).unwrap();
        let mut rhs = vec![1.0, -2.0, 0.5];
        solve_lower_in_place(&buf, &mut rhs, 3);
        solve_lower_transpose_in_place(&buf, &mut rhs, 3);
        let x = DMatrix::from_column_slice(3, 1, &rhs);
        let resid = &m * &x - DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        assert!(resid.amax() < 1e-10);
    }

    #[test]
    fn solves_match_inverse() {
        let m = spd_example();
        let inv = spd_inverse(&m).unwrap();
        let prod = &m * &inv;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn matvec_and_rank_one_agree_with_nalgebra() {
        let m = spd_example();
        let u = [0.3, -1.2, 0.8];
        let mut w = [0.0; 3];
        matvec_leading(&m, &u, &mut w, 3);
        let expect = &m * DMatrix::from_column_slice(3, 1, &u);
        for i in 0..3 {
            assert_abs_diff_eq!(w[i], expect[(i, 0)], epsilon = 1e-12);
        }
        let mut m2 = m.clone();
        rank_one_update_leading(&mut m2, &u, 0.7, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(m2[(i, j)], m[(i, j)] + 0.7 * u[i] * u[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn log_det_matches_direct() {
        let m = spd_example();
        let l = cholesky(&m).unwrap();
        let det = m.determinant();
        assert_abs_diff_eq!(log_det_from_chol(&l), det.ln(), epsilon = 1e-10);
    }

    #[test]
    fn correlation_projection_restores_pd() {
        // An "almost correlation" matrix with a negative eigenvalue.
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.95, -0.9, 0.95, 1.0, 0.6, -0.9, 0.6, 1.0],
        );
        assert!(min_eigenvalue_sym(&m) < 0.0);
        let proj = nearest_correlation_clip(&m, 1e-8).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(proj[(i, i)], 1.0, epsilon = 1e-12);
        }
        assert!(min_eigenvalue_sym(&proj) >= 0.0);
        assert!(is_positive_definite(&proj));
        // Already-valid matrices pass through nearly unchanged.
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
        let same = nearest_correlation_clip(&ok, 1e-8).unwrap();
        assert_abs_diff_eq!(same[(0, 1)], 0.4, epsilon = 1e-10);
    }

    #[test]
    fn pearson_handles_degenerate_inputs() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        assert_abs_diff_eq!(pearson(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
        let c = [5.0, 5.0, 5.0, 5.0];
        assert!(pearson(&a, &c).is_none());
        assert!(pearson(&a[..1], &b[..1]).is_none());
    }
}
