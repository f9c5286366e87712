//! Adaptive cross approximation driven by QDEIM index selection.
//!
//! [`cross_deim`] alternates between choosing row/column indices from the
//! current singular-vector estimates and recomputing a stabilized cross
//! approximation from the sampled rows and columns. Index sets only grow
//! (new QDEIM pivots are merged in front of the previous ones) until
//! redundancy pruning removes linearly dependent samples, and the loop
//! stops once consecutive approximations agree and the smallest retained
//! singular value, weighted by the interpolation constants, is below the
//! tolerance.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, orthonormalize, pivoted_qr};
use crate::lowrank::{diff_norm, FactoredMatrix, TruncationSpec};
use crate::oracle::EntryOracle;

/// Diagonal magnitude below which a sampled row or column is redundant.
pub const REDUNDANCY_TOL: f64 = 1e-12;

/// Ratio of extreme triangular diagonals below which the interpolation
/// block is treated as ill conditioned.
pub const WELL_CONDITIONED_RATIO: f64 = 1e-10;

/// Ordered, duplicate-free list of 0-based indices; earlier entries are
/// more important.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(indices.len());
        for &i in &indices {
            if !seen.insert(i) {
                return Err(Error::InvalidArgument(format!("duplicate index {i}")));
            }
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    /// `self` followed by the entries of `older` not already present.
    pub fn merged_with(&self, older: &IndexSet) -> IndexSet {
        let mut out = self.0.clone();
        for &i in &older.0 {
            if !self.0.contains(&i) {
                out.push(i);
            }
        }
        IndexSet(out)
    }

    fn push_random_from_complement(&mut self, dim: usize, rng: &mut impl Rng) -> bool {
        if self.0.len() >= dim {
            return false;
        }
        let mut taken = vec![false; dim];
        for &i in &self.0 {
            taken[i] = true;
        }
        let pick = rng.random_range(0..dim - self.0.len());
        let idx = taken
            .iter()
            .enumerate()
            .filter(|(_, &t)| !t)
            .nth(pick)
            .map(|(i, _)| i)
            .expect("complement is nonempty");
        self.0.push(idx);
        true
    }

    fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    fn retain_by(&mut self, keep: &[bool]) {
        let mut it = keep.iter();
        self.0.retain(|_| *it.next().unwrap_or(&true));
    }

    fn in_range(&self, dim: usize) -> bool {
        self.0.iter().all(|&i| i < dim)
    }
}

/// QDEIM: the first `l` pivots of a column-pivoted QR of `U^T`.
pub fn qdeim(u: &DMatrix<f64>) -> Result<IndexSet> {
    let (p, l) = u.shape();
    if l > p {
        return Err(Error::InvalidArgument(format!(
            "qdeim needs at least as many rows as columns, got {p}x{l}"
        )));
    }
    if l == 0 {
        return Ok(IndexSet::empty());
    }
    let f = pivoted_qr(&u.transpose(), None);
    Ok(IndexSet(f.perm[..l].to_vec()))
}

/// Result of [`scross`].
#[derive(Debug, Clone)]
pub struct ScrossOutput {
    pub approx: FactoredMatrix,
    /// Diagonal of the row-sample triangular factor, aligned with the row
    /// index set.
    pub r_rows: Vec<f64>,
    /// Diagonal of the column-sample triangular factor, aligned with the
    /// column index set.
    pub r_cols: Vec<f64>,
}

/// Solve `a * w = rhs` in the least-squares sense, by pivoted QR when the
/// triangular diagonal ratio is acceptable and by truncated-SVD
/// pseudoinverse otherwise.
fn guarded_solve(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    let f = pivoted_qr(a, None);
    let k = f.r.nrows().min(f.r.ncols());
    let dmax = if k > 0 { f.r[(0, 0)].abs() } else { 0.0 };
    let dmin = if k > 0 { f.r[(k - 1, k - 1)].abs() } else { 0.0 };
    if rows >= cols && k == cols && dmax > 0.0 && dmin / dmax >= WELL_CONDITIONED_RATIO {
        let qtb = f.q.tr_mul(rhs);
        let rsq = f.r.columns(0, cols).into_owned();
        let y = rsq
            .solve_upper_triangular(&qtb)
            .ok_or_else(|| Error::InvalidArgument("singular triangular factor".into()))?;
        let mut w = DMatrix::zeros(cols, rhs.ncols());
        for (pos, &orig) in f.perm.iter().enumerate() {
            w.row_mut(orig).copy_from(&y.row(pos));
        }
        return Ok(w);
    }
    let svd = linalg::svd_sorted(a)?;
    let cutoff = svd.s[0] * WELL_CONDITIONED_RATIO;
    let mut w = DMatrix::zeros(cols, rhs.ncols());
    for k in 0..svd.s.len() {
        if svd.s[k] > cutoff && svd.s[k] > 0.0 {
            let coef = svd.u.column(k).transpose() * rhs / svd.s[k];
            w += svd.v.column(k) * coef;
        }
    }
    Ok(w)
}

/// Truncated SVD dropping values below `max(p, q) * eps_mach * sigma_1`.
fn numerical_svd(w: &DMatrix<f64>) -> Result<Option<linalg::SortedSvd>> {
    let svd = linalg::svd_sorted(w)?;
    if svd.s[0] == 0.0 {
        return Ok(None);
    }
    let (p, q) = w.shape();
    let cut = p.max(q) as f64 * f64::EPSILON * svd.s[0];
    let r = svd.s.iter().take_while(|&&s| s > cut).count().max(1);
    Ok(Some(linalg::SortedSvd {
        u: svd.u.columns(0, r).into_owned(),
        s: svd.s.rows(0, r).into_owned(),
        v: svd.v.columns(0, r).into_owned(),
    }))
}

/// Stabilized cross approximation from rows `rows` and columns `cols`.
pub fn scross(g: &dyn EntryOracle, rows: &IndexSet, cols: &IndexSet) -> Result<ScrossOutput> {
    let (m, n) = (g.nrows(), g.ncols());
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidArgument("scross needs nonempty index sets".into()));
    }
    if !rows.in_range(m) || !cols.in_range(n) {
        return Err(Error::InvalidArgument("scross index out of range".into()));
    }
    let c = g.col_block(cols.as_slice())?;
    let r = g.row_block(rows.as_slice())?;
    if c.iter().chain(r.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("sampled cross"));
    }
    let zero = || ScrossOutput {
        approx: FactoredMatrix::zeros(m, n),
        r_rows: vec![0.0; rows.len()],
        r_cols: vec![0.0; cols.len()],
    };
    if c.iter().all(|&x| x == 0.0) && r.iter().all(|&x| x == 0.0) {
        return Ok(zero());
    }

    let qr_c = pivoted_qr(&c, None);
    let qr_r = pivoted_qr(&r.transpose(), None);
    let r_cols = qr_c.diag_unpermuted();
    let r_rows = qr_r.diag_unpermuted();

    let approx = if cols.len() <= rows.len() {
        let q = &qr_c.q;
        let w = guarded_solve(&q.select_rows(rows.as_slice()), &r)?;
        match numerical_svd(&w)? {
            None => FactoredMatrix::zeros(m, n),
            Some(svd) => FactoredMatrix::from_parts(q * svd.u, svd.s, svd.v)?,
        }
    } else {
        let z = &qr_r.q;
        let w = guarded_solve(&z.select_rows(cols.as_slice()), &c.transpose())?;
        match numerical_svd(&w.transpose())? {
            None => FactoredMatrix::zeros(m, n),
            Some(svd) => FactoredMatrix::from_parts(svd.u, svd.s, z * svd.v)?,
        }
    };
    Ok(ScrossOutput {
        approx,
        r_rows,
        r_cols,
    })
}

/// Parameters of [`cross_deim`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossConfig {
    /// Frobenius tolerance.
    pub eps: f64,
    /// Output rank cap.
    pub r_max: usize,
    /// Cap on index-set cardinality.
    pub aleph_max: usize,
    pub maxiter: usize,
    pub rng_seed: u64,
}

impl CrossConfig {
    /// Caps disabled: `r_max = aleph_max = min(m, n)`, 100 iterations.
    pub fn new(eps: f64, m: usize, n: usize) -> Self {
        Self {
            eps,
            r_max: m.min(n),
            aleph_max: m.min(n),
            maxiter: 100,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidArgument("cross eps must be >= 0".into()));
        }
        if self.aleph_max == 0 || self.maxiter == 0 || self.r_max == 0 {
            return Err(Error::InvalidArgument(
                "aleph_max, maxiter and r_max must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-run statistics of [`cross_deim`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrossDiagnostics {
    pub iterations: usize,
    /// `max_k max(|I_k|, |J_k|)`.
    pub max_intermediate_rank: usize,
    pub final_rho: f64,
    pub final_eta1: f64,
    pub final_eta2: f64,
    pub random_safeguards_used: usize,
    /// Rows plus columns requested from the oracle.
    pub samples: usize,
    pub converged: bool,
}

/// Random unit vectors for a cold start.
pub fn cold_start(m: usize, n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = |len: usize| {
        let mut x = DMatrix::from_fn(len, 1, |_, _| rng.random::<f64>() - 0.5);
        let nrm = x.norm();
        if nrm > 0.0 {
            x /= nrm;
        } else {
            x[(0, 0)] = 1.0;
        }
        x
    };
    let u = unit(m);
    let v = unit(n);
    (u, v)
}

fn eta(basis: &DMatrix<f64>, idx: &IndexSet) -> f64 {
    if idx.is_empty() {
        return f64::INFINITY;
    }
    let nrm = linalg::spectral_norm(&basis.select_rows(idx.as_slice()));
    if nrm == 0.0 {
        f64::INFINITY
    } else {
        1.0 / nrm
    }
}

/// Adaptive Cross-DEIM approximation of `g` to Frobenius tolerance
/// `cfg.eps`, warm-started from the singular-vector estimates `u0`, `v0`.
///
/// When `cfg.maxiter` is exhausted the last approximation is returned with
/// `converged = false` in the diagnostics.
pub fn cross_deim(
    g: &dyn EntryOracle,
    u0: &DMatrix<f64>,
    v0: &DMatrix<f64>,
    cfg: &CrossConfig,
) -> Result<(FactoredMatrix, CrossDiagnostics)> {
    cfg.validate()?;
    let (m, n) = (g.nrows(), g.ncols());
    if u0.nrows() != m || v0.nrows() != n || u0.ncols() == 0 || v0.ncols() == 0 {
        return Err(Error::ShapeMismatch {
            expected: (m, n),
            got: (u0.nrows(), v0.nrows()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut u_prev = orthonormalize(&u0.columns(0, u0.ncols().min(m)).into_owned());
    let mut v_prev = orthonormalize(&v0.columns(0, v0.ncols().min(n)).into_owned());
    let mut rows = IndexSet::empty();
    let mut cols = IndexSet::empty();
    let mut prev = FactoredMatrix::zeros(m, n);
    let mut diag = CrossDiagnostics::default();

    for k in 1..=cfg.maxiter {
        let rows_star = qdeim(&u_prev)?;
        let cols_star = qdeim(&v_prev)?;
        let mut new_rows = rows_star.merged_with(&rows);
        let mut new_cols = cols_star.merged_with(&cols);
        if (new_rows.len() == rows.len() || k == 1) && new_rows.push_random_from_complement(m, &mut rng) {
            diag.random_safeguards_used += 1;
        }
        if (new_cols.len() == cols.len() || k == 1) && new_cols.push_random_from_complement(n, &mut rng) {
            diag.random_safeguards_used += 1;
        }
        new_rows.truncate(cfg.aleph_max);
        new_cols.truncate(cfg.aleph_max);
        debug_assert!(IndexSet::new(new_rows.0.clone()).is_ok());
        debug_assert!(IndexSet::new(new_cols.0.clone()).is_ok());
        diag.max_intermediate_rank = diag
            .max_intermediate_rank
            .max(new_rows.len())
            .max(new_cols.len());

        let out = scross(g, &new_rows, &new_cols)?;
        diag.samples += new_rows.len() + new_cols.len();
        // Singular values below roundoff are dropped by scross; a cross that
        // came back with fewer directions than it sampled has S_min = 0.
        let deficient = out.approx.rank() < new_rows.len().min(new_cols.len());
        diag.iterations = k;

        let keep_rows: Vec<bool> = out.r_rows.iter().map(|x| x.abs() >= REDUNDANCY_TOL).collect();
        let keep_cols: Vec<bool> = out.r_cols.iter().map(|x| x.abs() >= REDUNDANCY_TOL).collect();
        new_rows.retain_by(&keep_rows);
        new_cols.retain_by(&keep_cols);
        rows = new_rows;
        cols = new_cols;

        let approx = out.approx;
        let rho = diff_norm(&approx, &prev)?;
        let s_min = if deficient { 0.0 } else { approx.s().min() };
        let eta1 = eta(approx.u(), &rows);
        let eta2 = eta(approx.v(), &cols);
        let indicator = if s_min == 0.0 {
            0.0
        } else {
            (eta1 * (1.0 + eta2)).min(eta2 * (1.0 + eta1)) * s_min
        };
        diag.final_rho = rho;
        diag.final_eta1 = eta1;
        diag.final_eta2 = eta2;

        u_prev = approx.u().clone();
        v_prev = approx.v().clone();
        prev = approx;
        if rho.max(indicator) < cfg.eps {
            diag.converged = true;
            break;
        }
    }

    let spec = TruncationSpec {
        eps: cfg.eps,
        r_max: cfg.r_max,
    };
    Ok((prev.truncated(spec), diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FnOracle;

    #[test]
    fn qdeim_identity_columns() {
        let u = DMatrix::identity(4, 2);
        assert_eq!(qdeim(&u).unwrap().as_slice(), &[0, 1]);
    }

    #[test]
    fn qdeim_single_column_picks_max() {
        let mut u = DMatrix::zeros(5, 1);
        u[(2, 0)] = 1.0;
        assert_eq!(qdeim(&u).unwrap().as_slice(), &[2]);
    }

    #[test]
    fn qdeim_too_many_columns() {
        assert!(qdeim(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn index_set_rejects_duplicates() {
        assert!(IndexSet::new(vec![1, 2, 1]).is_err());
        let a = IndexSet::new(vec![3, 1]).unwrap();
        let b = IndexSet::new(vec![1, 5, 0]).unwrap();
        assert_eq!(a.merged_with(&b).as_slice(), &[3, 1, 5, 0]);
    }

    #[test]
    fn rank_one_cross_is_exact() {
        let u: Vec<f64> = (0..7).map(|i| 1.0 + i as f64).collect();
        let v: Vec<f64> = (0..6).map(|j| (j as f64 * 0.7).cos() + 2.0).collect();
        let g = FnOracle::new(7, 6, |i, j| u[i] * v[j]);
        let out = scross(&g, &IndexSet::new(vec![3]).unwrap(), &IndexSet::new(vec![2]).unwrap()).unwrap();
        for i in 0..7 {
            for j in 0..6 {
                let e = out.approx.entry(i, j).unwrap();
                assert!((e - u[i] * v[j]).abs() < 1e-12 * u[i] * v[j]);
            }
        }
    }

    #[test]
    fn zero_cross() {
        let g = FnOracle::new(5, 5, |_, _| 0.0);
        let out = scross(&g, &IndexSet::new(vec![0, 1]).unwrap(), &IndexSet::new(vec![2]).unwrap()).unwrap();
        assert!(out.approx.is_zero());
        assert!(out.r_rows.iter().chain(&out.r_cols).all(|&x| x == 0.0));
    }

    #[test]
    fn zero_oracle_converges_quickly() {
        let g = FnOracle::new(30, 20, |_, _| 0.0);
        let (u0, v0) = cold_start(30, 20, 3);
        let (x, d) = cross_deim(&g, &u0, &v0, &CrossConfig::new(1e-6, 30, 20)).unwrap();
        assert!(x.is_zero());
        assert!(d.converged && d.iterations <= 2);
    }

    #[test]
    fn safeguard_grows_index_set_by_one() {
        let mut set = IndexSet::new(vec![0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(set.push_random_from_complement(4, &mut rng));
        assert_eq!(set.len(), 3);
        assert!(set.as_slice()[2] >= 2);
        let mut full = IndexSet::new(vec![0, 1]).unwrap();
        assert!(!full.push_random_from_complement(2, &mut rng));
    }
}
