//! Internal dense linear algebra: symmetric eigendecomposition (cyclic
//! Jacobi), thin SVD (one-sided Jacobi), and Cholesky factorization.
//!
//! All routines are deterministic: fixed sweep order, stable sorts, no
//! data-dependent reordering, so repeated runs produce identical bits.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the columns of the returned matrix.
pub(crate) fn jacobi_eigh_desc(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut a = a.clone();
    let mut v = Matrix::identity(n);

    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += a.get(i, j) * a.get(i, j);
        }
    }
    let stop = 1e-30 * total.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if 2.0 * off <= stop {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                // Skip rotations that cannot change anything at f64 precision.
                if fabs(apq) <= f64::EPSILON * 1e-2 * (fabs(app) + fabs(aqq)) {
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;

                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    let new_ip = c * aip - s * aiq;
                    let new_iq = s * aip + c * aiq;
                    a.set(i, p, new_ip);
                    a.set(p, i, new_ip);
                    a.set(i, q, new_iq);
                    a.set(q, i, new_iq);
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);

                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .partial_cmp(&a.get(i, i))
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    (eigenvalues, vectors)
}

pub(crate) struct ThinSvd {
    /// m x n, orthonormal columns where the corresponding singular value is
    /// nonzero (zero columns for a rank-deficient input).
    pub u: Matrix,
    /// Descending, nonnegative.
    pub sigma: Vec<f64>,
    /// n x n orthogonal.
    pub v: Matrix,
}

/// Thin SVD of an m x n matrix (intended for n << m) by one-sided Jacobi:
/// columns are rotated until mutually orthogonal, working on the matrix
/// itself rather than its Gram matrix.
pub(crate) fn one_sided_jacobi_svd(a: &Matrix) -> ThinSvd {
    let m = a.rows();
    let n = a.cols();
    // Column-major copy so each column is contiguous for the rotations.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| a.col(c)).collect();
    let mut v = Matrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut converged = true;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let x = cols[p][i];
                    let y = cols[q][i];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if fabs(gamma) <= 1e-15 * sqrt(alpha * beta) || gamma == 0.0 {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
        if converged {
            break;
        }
    }

    let mut sigma: Vec<f64> = cols
        .iter()
        .map(|col| sqrt(col.iter().map(|x| x * x).sum::<f64>()))
        .collect();

    // Order columns by descending singular value (stable on ties).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        sigma[j]
            .partial_cmp(&sigma[i])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut sigma_sorted = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        sigma_sorted[dst] = sigma[src];
        let norm = sigma[src];
        if norm > 0.0 {
            for i in 0..m {
                u.set(i, dst, cols[src][i] / norm);
            }
        }
        for i in 0..n {
            v_sorted.set(i, dst, v.get(i, src));
        }
    }
    sigma = sigma_sorted;

    ThinSvd {
        u,
        sigma,
        v: v_sorted,
    }
}

/// Minimum-norm least-squares solution of `a * x = y` via the thin SVD.
///
/// Returns the solution and whether the system was rank deficient (singular
/// values below `1e-12` of the largest were dropped).
pub(crate) fn solve_least_squares_min_norm(a: &Matrix, y: &[f64]) -> (Vec<f64>, bool) {
    debug_assert_eq!(a.rows(), y.len());
    let n = a.cols();
    let svd = one_sided_jacobi_svd(a);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let cutoff = smax * 1e-12;
    let mut x = vec![0.0; n];
    let mut rank_deficient = false;
    for j in 0..n {
        if svd.sigma[j] <= cutoff || svd.sigma[j] == 0.0 {
            rank_deficient = true;
            continue;
        }
        let mut uy = 0.0;
        for i in 0..a.rows() {
            uy += svd.u.get(i, j) * y[i];
        }
        let coef = uy / svd.sigma[j];
        for i in 0..n {
            x[i] += coef * svd.v.get(i, j);
        }
    }
    (x, rank_deficient)
}

/// Cholesky factorization `a = L * L^T`; `None` if the matrix is not
/// (numerically) positive definite.
pub(crate) fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l.set(i, j, sqrt(sum));
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Solves `L * L^T * x = b` given the Cholesky factor `L`.
pub(crate) fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    debug_assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l.get(i, k) * y[k];
        }
        y[i] = sum / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l.get(k, i) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}
