//! Dense brute-force counterparts used to verify the low-rank code paths.
//!
//! Nothing in the solver or the problem definitions depends on this
//! module; it exists for tests, acceptance checks and the dense baseline
//! runs of the experiment driver.

mod dense_problems;

pub use dense_problems::*;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lowrank::FactoredMatrix;

pub type DenseMatrix = DMatrix<f64>;

/// Default cap on the number of entries [`densify`] will materialize.
pub const DENSIFY_CAP: usize = 1_000_000;

/// `U * diag(S) * V^T` as a dense matrix, refusing more than
/// [`DENSIFY_CAP`] entries.
pub fn densify(x: &FactoredMatrix) -> Result<DenseMatrix> {
    densify_with_cap(x, DENSIFY_CAP)
}

pub fn densify_with_cap(x: &FactoredMatrix, cap: usize) -> Result<DenseMatrix> {
    let (m, n) = x.shape();
    if m.saturating_mul(n) > cap {
        return Err(Error::DensifyCap {
            nrows: m,
            ncols: n,
            cap,
        });
    }
    let mut out = DMatrix::zeros(m, n);
    for k in 0..x.rank() {
        let s = x.s()[k];
        for j in 0..n {
            let vj = s * x.v()[(j, k)];
            if vj == 0.0 {
                continue;
            }
            for i in 0..m {
                out[(i, j)] += x.u()[(i, k)] * vj;
            }
        }
    }
    Ok(out)
}

/// One-sided Jacobi SVD with singular values in nonincreasing order.
/// Returns `(U, s, V)` with `U` of size `p x k`, `V` of size `q x k`,
/// `k = min(p, q)`.
pub fn jacobi_svd(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let transposed = a.nrows() < a.ncols();
    let mut w = if transposed { a.transpose() } else { a.clone() };
    let (p, q) = w.shape();
    let mut v = DMatrix::<f64>::identity(q, q);
    for _sweep in 0..80 {
        let mut off = 0.0f64;
        for i in 0..q {
            for j in (i + 1)..q {
                let alpha: f64 = w.column(i).norm_squared();
                let beta: f64 = w.column(j).norm_squared();
                let gamma: f64 = w.column(i).dot(&w.column(j));
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..p {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)];
                    w[(r, i)] = c * wi - s * wj;
                    w[(r, j)] = s * wi + c * wj;
                }
                for r in 0..q {
                    let vi = v[(r, i)];
                    let vj = v[(r, j)];
                    v[(r, i)] = c * vi - s * vj;
                    v[(r, j)] = s * vi + c * vj;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<(f64, usize)> = (0..q).map(|j| (w.column(j).norm(), j)).collect();
    sv.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut u = DMatrix::zeros(p, q);
    let mut vv = DMatrix::zeros(q, q);
    let mut s = Vec::with_capacity(q);
    for (dst, &(sig, src)) in sv.iter().enumerate() {
        s.push(sig);
        if sig > 0.0 {
            u.column_mut(dst).copy_from(&(w.column(src) / sig));
        }
        vv.column_mut(dst).copy_from(&v.column(src));
    }
    if transposed {
        (vv, s, u)
    } else {
        (u, s, vv)
    }
}

/// Minimum-norm least-squares solution of `a x = b` through
/// [`jacobi_svd`], ignoring singular values below `rtol * s_max`.
pub fn jacobi_lstsq(a: &DenseMatrix, b: &DVector<f64>, rtol: f64) -> DVector<f64> {
    let (u, s, v) = jacobi_svd(a);
    let cutoff = rtol * s.first().copied().unwrap_or(0.0);
    let mut x = DVector::zeros(a.ncols());
    for (k, &sk) in s.iter().enumerate() {
        if sk > cutoff && sk > 0.0 {
            x += v.column(k) * (u.column(k).dot(b) / sk);
        }
    }
    x
}

/// Singular values of a dense matrix via [`jacobi_svd`].
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    jacobi_svd(a).1
}

/// Rank of the optimal approximation with Frobenius error `<= eps`.
pub fn svd_rank(s: &[f64], eps: f64) -> usize {
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 0 && tail + s[r - 1] * s[r - 1] <= eps * eps {
        tail += s[r - 1] * s[r - 1];
        r -= 1;
    }
    r
}

/// Pivot order of modified Gram-Schmidt with column pivoting on the
/// columns of `a`; the first `count` pivots.
pub fn mgs_pivot_order(a: &DenseMatrix, count: usize) -> Vec<usize> {
    let mut w = a.clone();
    let n = w.ncols();
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(count);
    for _ in 0..count.min(n) {
        let mut best = None;
        let mut best_norm = -1.0;
        for j in (0..n).filter(|&j| !used[j]) {
            let nrm = w.column(j).norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(j);
            }
        }
        let p = best.expect("unused column");
        used[p] = true;
        order.push(p);
        if best_norm == 0.0 {
            continue;
        }
        let q = w.column(p) / best_norm;
        for j in (0..n).filter(|&j| !used[j]) {
            let d = q.dot(&w.column(j));
            let upd = w.column(j) - &q * d;
            w.column_mut(j).copy_from(&upd);
        }
    }
    order
}

/// Sine of the largest principal angle between the column spaces of two
/// matrices with orthonormal columns.
pub fn max_principal_angle_sin(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let c = a.tr_mul(b);
    let s = singular_values(&c);
    let cmin = s.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    (1.0 - cmin * cmin).max(0.0).sqrt()
}

/// Hilbert matrix `1 / (i + j - 1)` (1-based).
pub fn hilbert(m: usize, n: usize) -> DenseMatrix {
    DMatrix::from_fn(m, n, |i, j| 1.0 / (i + j + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::{truncated_svd_dense, TruncationSpec};

    #[test]
    fn densify_zero_and_outer() {
        let z = FactoredMatrix::zeros(3, 4);
        assert!(densify(&z).unwrap().iter().all(|&x| x == 0.0));
        let a = nalgebra::DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let b = nalgebra::DVector::from_vec(vec![0.5, 4.0]);
        let x = FactoredMatrix::outer(&a, &b).unwrap();
        let d = densify(&x).unwrap();
        let direct = &a * b.transpose();
        assert!((d - direct).amax() < 1e-15);
    }

    #[test]
    fn densify_cap_enforced() {
        let z = FactoredMatrix::zeros(2000, 1000);
        assert!(matches!(densify(&z), Err(Error::DensifyCap { .. })));
    }

    #[test]
    fn jacobi_matches_known_values() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 4.0, 5.0]);
        let (u, s, v) = jacobi_svd(&a);
        assert!((s[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((s[1] - 5f64.sqrt()).abs() < 1e-12);
        let recon = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * v.transpose();
        assert!((recon - a).amax() < 1e-12);
    }

    #[test]
    fn round_trip_subspace() {
        let a = hilbert(12, 9);
        let x = truncated_svd_dense(&a, TruncationSpec::exact()).unwrap();
        let y = truncated_svd_dense(&densify(&x).unwrap(), TruncationSpec::exact()).unwrap();
        let top = 6;
        let sin = max_principal_angle_sin(
            &x.u().columns(0, top).into_owned(),
            &y.u().columns(0, top).into_owned(),
        );
        assert!(sin <= 1e-10, "{sin}");
    }
}
