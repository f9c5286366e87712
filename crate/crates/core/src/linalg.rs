//! Dense kernels on small matrices: column-pivoted Householder QR, sorted
//! SVD, tail-rank selection and a guarded least-squares solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column-pivoted QR factorization `A[:, perm] = Q * R`.
///
/// `q` is `m x k` with orthonormal columns and `r` is `k x n` upper
/// trapezoidal, where `k = min(m, n)` unless the factorization was stopped
/// early by a norm threshold.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub perm: Vec<usize>,
}

impl PivotedQr {
    /// `R * P^T`, i.e. the triangular factor with columns returned to the
    /// original order, so that `A = Q * r_unpermuted()`.
    pub fn r_unpermuted(&self) -> DMatrix<f64> {
        let (k, n) = self.r.shape();
        let mut out = DMatrix::zeros(k, n);
        for (pos, &col) in self.perm.iter().enumerate() {
            out.column_mut(col).copy_from(&self.r.column(pos));
        }
        out
    }

    /// Diagonal of `R` scattered back to the original column positions.
    /// Columns beyond the computed rank get zero.
    pub fn diag_unpermuted(&self) -> Vec<f64> {
        let n = self.perm.len();
        let k = self.r.nrows().min(self.r.ncols());
        let mut out = vec![0.0; n];
        for pos in 0..k {
            out[self.perm[pos]] = self.r[(pos, pos)];
        }
        out
    }
}

/// Householder QR with column pivoting.
///
/// When `stop_below` is given, the factorization stops as soon as every
/// remaining column norm is `<= stop_below`; the discarded trailing block
/// then has Frobenius norm at most `sqrt(n) * stop_below`.
pub fn pivoted_qr(a: &DMatrix<f64>, stop_below: Option<f64>) -> PivotedQr {
    let (m, n) = a.shape();
    let kmax = m.min(n);
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut orig = norms.clone();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(kmax);
    let tol3z = f64::EPSILON.sqrt();

    let mut k = 0;
    while k < kmax {
        let (p, pmax) = norms[k..]
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let p = p + k;
        if let Some(t) = stop_below {
            if pmax <= t {
                break;
            }
        }
        if p != k {
            w.swap_columns(p, k);
            perm.swap(p, k);
            norms.swap(p, k);
            orig.swap(p, k);
        }

        let data = w.as_mut_slice();
        let col = &mut data[k * m..(k + 1) * m];
        let x = &mut col[k..];
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        let tau;
        if xnorm == 0.0 {
            tau = 0.0;
        } else {
            let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|t| t * t).sum();
            tau = if vv > 0.0 { 2.0 / vv } else { 0.0 };
            x[0] = alpha;
            for t in x[1..].iter_mut() {
                *t = 0.0;
            }
        }

        if tau != 0.0 {
            for j in (k + 1)..n {
                let cj = &mut data[j * m + k..(j + 1) * m];
                let dot: f64 = cj.iter().zip(&v).map(|(a, b)| a * b).sum();
                let s = tau * dot;
                for (c, vi) in cj.iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
        }
        reflectors.push((v, tau));

        // Norm downdating with recomputation on cancellation.
        for j in (k + 1)..n {
            if norms[j] != 0.0 {
                let rkj = data[j * m + k];
                let mut temp = 1.0 - (rkj.abs() / norms[j]).powi(2);
                temp = temp.max(0.0);
                let temp2 = temp * (norms[j] / orig[j]).powi(2);
                if temp2 <= tol3z {
                    let cj = &data[j * m + k + 1..(j + 1) * m];
                    norms[j] = cj.iter().map(|t| t * t).sum::<f64>().sqrt();
                    orig[j] = norms[j];
                } else {
                    norms[j] *= temp.sqrt();
                }
            }
        }
        k += 1;
    }

    let kk = k;
    let mut r = DMatrix::zeros(kk, n);
    for j in 0..n {
        for i in 0..kk.min(j + 1) {
            r[(i, j)] = w[(i, j)];
        }
    }

    let mut q = DMatrix::zeros(m, kk);
    for i in 0..kk {
        q[(i, i)] = 1.0;
    }
    {
        let qd = q.as_mut_slice();
        for (j, (v, tau)) in reflectors.iter().enumerate().take(kk).rev() {
            if *tau == 0.0 {
                continue;
            }
            for c in j..kk {
                let col = &mut qd[c * m + j..(c + 1) * m];
                let dot: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
                let s = tau * dot;
                for (t, vi) in col.iter_mut().zip(v) {
                    *t -= s * vi;
                }
            }
        }
    }

    PivotedQr { q, r, perm }
}

/// Thin orthonormal basis of the column space (all columns kept).
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    pivoted_qr(a, None).q
}

/// SVD with singular values sorted in nonincreasing order.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_sorted(a: &DMatrix<f64>) -> Result<SortedSvd> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    let (p, q) = a.shape();
    let k = p.min(q);
    if k == 0 {
        return Err(Error::InvalidArgument("svd of an empty matrix".into()));
    }
    let (u, s, v) = thin_svd(a)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut us = DMatrix::zeros(p, k);
    let mut vs = DMatrix::zeros(q, k);
    let mut ss = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        us.column_mut(dst).copy_from(&u.column(src));
        vs.column_mut(dst).copy_from(&v.column(src));
        ss[dst] = s[src];
    }
    Ok(SortedSvd { u: us, s: ss, v: vs })
}

/// Thin SVD `A = U diag(s) V^T` computed by faer. nalgebra's bidiagonal
/// SVD returns wrong factors for a noticeable fraction of rank-deficient
/// inputs, which is exactly the case rounding meets all the time.
fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (p, q) = a.shape();
    let k = p.min(q);
    let fa = faer::Mat::<f64>::from_fn(p, q, |i, j| a[(i, j)]);
    let svd = fa.thin_svd().map_err(|_| Error::SvdNoConvergence { nrows: p, ncols: q })?;
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    Ok((
        DMatrix::from_fn(p, k, |i, j| u[(i, j)]),
        DVector::from_fn(k, |i, _| s[i]),
        DMatrix::from_fn(q, k, |i, j| v[(i, j)]),
    ))
}

/// Smallest `r` such that `sum_{l >= r} s_l^2 <= eps^2` for nonincreasing `s`.
pub fn tail_rank(s: &[f64], eps: f64) -> usize {
    let eps2 = eps * eps;
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 0 {
        let next = tail + s[r - 1] * s[r - 1];
        if next > eps2 {
            break;
        }
        tail = next;
        r -= 1;
    }
    r
}

/// Frobenius norm of the discarded tail beyond rank `r`.
pub fn tail_norm(s: &[f64], r: usize) -> f64 {
    s[r.min(s.len())..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    thin_svd(a).map_or(f64::NAN, |(_, s, _)| s.max())
}

/// Least-squares solution of a small dense system.
#[derive(Debug, Clone)]
pub struct DenseLstsq {
    pub x: DVector<f64>,
    /// Ratio of extreme singular values of the system matrix.
    pub condition: f64,
    /// True when the SVD minimum-norm branch was taken.
    pub min_norm: bool,
}

/// Condition threshold above which the minimum-norm SVD solve is used.
pub const LSTSQ_COND_LIMIT: f64 = 1e12;

/// Solve `min ||a x - b||` by QR when `cond(a) <= 1e12`, otherwise return the
/// SVD minimum-norm solution with singular values below `sigma_1 / 1e12`
/// discarded.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DenseLstsq> {
    let (rows, cols) = a.shape();
    if rows != b.len() {
        return Err(Error::ShapeMismatch {
            expected: (rows, 1),
            got: (b.len(), 1),
        });
    }
    if cols == 0 {
        return Ok(DenseLstsq {
            x: DVector::zeros(0),
            condition: 1.0,
            min_norm: false,
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares system"));
    }
    let (u, sv, v) = thin_svd(a)?;
    let smax = sv.max();
    let smin = if rows >= cols {
        sv.min()
    } else {
        0.0
    };
    let condition = if smax == 0.0 || smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    };
    if condition <= LSTSQ_COND_LIMIT {
        let qr = a.clone().qr();
        let qtb = qr.q().tr_mul(b);
        let r = qr.r();
        let x = r
            .solve_upper_triangular(&qtb)
            .ok_or_else(|| Error::InvalidArgument("singular triangular factor".into()))?;
        return Ok(DenseLstsq {
            x,
            condition,
            min_norm: false,
        });
    }
    let cutoff = smax / LSTSQ_COND_LIMIT;
    let mut x = DVector::zeros(cols);
    for (k, &sk) in sv.iter().enumerate() {
        if sk > cutoff && sk > 0.0 {
            let coef = u.column(k).dot(b) / sk;
            x += v.column(k) * coef;
        }
    }
    Ok(DenseLstsq {
        x,
        condition,
        min_norm: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(a: &DMatrix<f64>) -> f64 {
        a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn pivoted_qr_reconstructs() {
        let a = DMatrix::from_fn(7, 5, |i, j| ((i * 3 + j * 7) % 11) as f64 - 4.0 + 0.1 * j as f64);
        let f = pivoted_qr(&a, None);
        let qtq = f.q.tr_mul(&f.q);
        assert!(max_abs(&(qtq - DMatrix::identity(5, 5))) < 1e-14);
        let recon = &f.q * f.r_unpermuted();
        assert!(max_abs(&(recon - &a)) < 1e-12);
        for i in 1..5 {
            assert!(f.r[(i, i)].abs() <= f.r[(i - 1, i - 1)].abs() + 1e-14);
        }
    }

    #[test]
    fn pivoted_qr_wide_and_rank_deficient() {
        let a = DMatrix::from_fn(3, 6, |i, j| (i + 1) as f64 * (j % 2) as f64);
        let f = pivoted_qr(&a, None);
        assert_eq!(f.q.shape(), (3, 3));
        let recon = &f.q * f.r_unpermuted();
        assert!(max_abs(&(recon - &a)) < 1e-12);
        let d = f.diag_unpermuted();
        assert_eq!(d.len(), 6);
        assert!(d.iter().filter(|x| x.abs() > 1e-12).count() == 1);
    }

    #[test]
    fn early_stop_drops_small_columns() {
        let mut a = DMatrix::zeros(5, 4);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1e-20;
        a[(2, 2)] = 2.0;
        let f = pivoted_qr(&a, Some(1e-15));
        assert_eq!(f.q.ncols(), 2);
        assert_eq!(&f.perm[..2], &[2, 0]);
    }

    #[test]
    fn tail_rank_cases() {
        assert_eq!(tail_rank(&[1.0, 1.0, 1.0], 0.0), 3);
        assert_eq!(tail_rank(&[0.0, 0.0], 1e-8), 0);
        assert_eq!(tail_rank(&[3.0, 0.3, 0.4], 0.5), 1);
        assert_eq!(tail_rank(&[3.0, 0.3, 0.4], 0.49), 2);
    }

    #[test]
    fn lstsq_min_norm_on_duplicate_columns() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, -1.0, -2.0, -3.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let sol = lstsq(&a, &b).unwrap();
        assert!(sol.min_norm);
        assert!((sol.x[0] - 0.5).abs() < 1e-12 && (sol.x[1] + 0.5).abs() < 1e-12);
    }
}
