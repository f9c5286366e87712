//! Matrices in factored SVD form and the low-rank linear algebra built on
//! them: truncation, rounding of sums, residual norms and the projected
//! least-squares problem used by Anderson mixing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, pivoted_qr};
use crate::oracle::{check_cols, check_index, check_rows, EntryOracle};

/// Absolute Frobenius tolerance and rank cap for truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    pub eps: f64,
    pub r_max: usize,
}

impl TruncationSpec {
    pub fn new(eps: f64, r_max: usize) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("truncation eps must be >= 0, got {eps}")));
        }
        if r_max == 0 {
            return Err(Error::InvalidArgument("r_max must be >= 1".into()));
        }
        Ok(Self { eps, r_max })
    }

    /// Exact rounding (no truncation beyond roundoff).
    pub fn exact() -> Self {
        Self {
            eps: 0.0,
            r_max: usize::MAX,
        }
    }

    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            r_max: usize::MAX,
        }
    }

    /// Rank kept for nonincreasing singular values `s`.
    pub fn rank_for(&self, s: &[f64]) -> usize {
        linalg::tail_rank(s, self.eps).min(self.r_max).min(s.len()).max(1)
    }
}

/// An `m x n` matrix stored as `U * diag(S) * V^T`.
///
/// `U` and `V` have orthonormal columns, `S` is nonnegative and
/// nonincreasing, and the rank is at least one: the zero matrix carries a
/// single zero singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredMatrix {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v: DMatrix<f64>,
}

impl FactoredMatrix {
    /// Assemble from factors. Shapes, finiteness and the ordering of `s`
    /// are checked; orthonormality is the caller's responsibility (see
    /// [`FactoredMatrix::orthonormality_defect`]).
    pub fn from_parts(u: DMatrix<f64>, s: DVector<f64>, v: DMatrix<f64>) -> Result<Self> {
        let r = s.len();
        if r == 0 || u.ncols() != r || v.ncols() != r {
            return Err(Error::InvalidArgument(format!(
                "factor shapes inconsistent: U {:?}, S {}, V {:?}",
                u.shape(),
                r,
                v.shape()
            )));
        }
        if u.nrows() == 0 || v.nrows() == 0 || r > u.nrows().min(v.nrows()) {
            return Err(Error::InvalidArgument(format!(
                "rank {} invalid for {}x{} matrix",
                r,
                u.nrows(),
                v.nrows()
            )));
        }
        if u.iter().chain(s.iter()).chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("factored matrix"));
        }
        if s.iter().any(|&x| x < 0.0) || s.as_slice().windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "singular values must be nonnegative and nonincreasing".into(),
            ));
        }
        Ok(Self { u, s, v })
    }

    /// The zero matrix: `U = e_1`, `S = [0]`, `V = e_1`.
    pub fn zeros(m: usize, n: usize) -> Self {
        let mut u = DMatrix::zeros(m, 1);
        let mut v = DMatrix::zeros(n, 1);
        u[(0, 0)] = 1.0;
        v[(0, 0)] = 1.0;
        Self {
            u,
            s: DVector::zeros(1),
            v,
        }
    }

    /// Rank-one matrix `a * b^T`.
    pub fn outer(a: &DVector<f64>, b: &DVector<f64>) -> Result<Self> {
        let na = a.norm();
        let nb = b.norm();
        if na == 0.0 || nb == 0.0 {
            return Ok(Self::zeros(a.len(), b.len()));
        }
        let u = DMatrix::from_column_slice(a.len(), 1, (a / na).as_slice());
        let v = DMatrix::from_column_slice(b.len(), 1, (b / nb).as_slice());
        Self::from_parts(u, DVector::from_element(1, na * nb), v)
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }
    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }
    pub fn rank(&self) -> usize {
        self.s.len()
    }
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }
    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.s.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.s.iter().all(|&x| x == 0.0)
    }

    /// Largest entrywise deviation of `U^T U` and `V^T V` from identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let r = self.rank();
        let id = DMatrix::<f64>::identity(r, r);
        let du = (self.u.tr_mul(&self.u) - &id).amax();
        let dv = (self.v.tr_mul(&self.v) - &id).amax();
        du.max(dv)
    }

    /// Keep the leading singular triplets allowed by `spec`.
    pub fn truncated(&self, spec: TruncationSpec) -> Self {
        let r = spec.rank_for(self.s.as_slice());
        self.leading(r)
    }

    /// First `r` singular triplets.
    pub fn leading(&self, r: usize) -> Self {
        let r = r.clamp(1, self.rank());
        Self {
            u: self.u.columns(0, r).into_owned(),
            s: self.s.rows(0, r).into_owned(),
            v: self.v.columns(0, r).into_owned(),
        }
    }

    /// `c * self` with the sign folded into `U`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.s *= c.abs();
        if c < 0.0 {
            out.u.neg_mut();
        }
        out
    }

    /// `X(i, j) = sum_k S_k U(i, k) V(j, k)`.
    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, j, self.nrows(), self.ncols())?;
        Ok(self.entry_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn entry_unchecked(&self, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.rank() {
            acc += self.s[k] * self.u[(i, k)] * self.v[(j, k)];
        }
        acc
    }

    /// Dense rows `X(rows, :)`.
    pub fn rows(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        check_rows(rows, self.nrows(), self.ncols())?;
        let mut us = self.u.select_rows(rows);
        for k in 0..self.rank() {
            us.column_mut(k).scale_mut(self.s[k]);
        }
        Ok(us * self.v.transpose())
    }

    /// Dense columns `X(:, cols)`.
    pub fn cols(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        check_cols(cols, self.nrows(), self.ncols())?;
        let mut vs = self.v.select_rows(cols);
        for k in 0..self.rank() {
            vs.column_mut(k).scale_mut(self.s[k]);
        }
        Ok(&self.u * vs.transpose())
    }

    /// Apply `a` from the left to `U` and `b` from the left to `V`, i.e. the
    /// factors of `a * X * b^T` (not orthonormal in general).
    pub fn sandwich(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> FactorSum {
        let mut sum = FactorSum::new(a.nrows(), b.nrows());
        sum.push_raw(a * &self.u, self.s.as_slice().to_vec(), b * &self.v);
        sum
    }
}

impl EntryOracle for FactoredMatrix {
    fn nrows(&self) -> usize {
        self.u.nrows()
    }
    fn ncols(&self) -> usize {
        self.v.nrows()
    }
    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        FactoredMatrix::entry(self, i, j)
    }
    fn row_block(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        self.rows(rows)
    }
    fn col_block(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        self.cols(cols)
    }
}

/// Truncated SVD of a dense matrix.
pub fn truncated_svd_dense(a: &DMatrix<f64>, spec: TruncationSpec) -> Result<FactoredMatrix> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let svd = linalg::svd_sorted(a)?;
    let r = spec.rank_for(svd.s.as_slice());
    Ok(FactoredMatrix {
        u: svd.u.columns(0, r).into_owned(),
        s: svd.s.rows(0, r).map(|x| x.max(0.0)),
        v: svd.v.columns(0, r).into_owned(),
    })
}

/// Relative column-norm threshold below which stacked factors are treated
/// as numerically dependent during QR reduction.
const STACK_QR_RTOL: f64 = 4.0 * f64::EPSILON;

/// An unreduced sum `sum_l w_l a_l b_l^T` over arbitrary (not necessarily
/// orthonormal) factor columns.
#[derive(Debug, Clone)]
pub struct FactorSum {
    m: usize,
    n: usize,
    a_blocks: Vec<DMatrix<f64>>,
    weights: Vec<Vec<f64>>,
    b_blocks: Vec<DMatrix<f64>>,
}

/// The small core `Q1^T (sum) Q2` and its bases.
struct ReducedCore {
    q1: DMatrix<f64>,
    q2: DMatrix<f64>,
    /// `R1 * P1^T`, columns in stacked order.
    r1: DMatrix<f64>,
    /// `R2 * P2^T`, columns in stacked order.
    r2: DMatrix<f64>,
    /// Stacked column range of each pushed block.
    ranges: Vec<(usize, usize)>,
}

impl FactorSum {
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            a_blocks: Vec::new(),
            weights: Vec::new(),
            b_blocks: Vec::new(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.a_blocks.is_empty()
    }

    /// Number of stacked columns.
    pub fn width(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }

    /// Add `a * diag(w) * b^T`.
    pub fn push_raw(&mut self, a: DMatrix<f64>, w: Vec<f64>, b: DMatrix<f64>) {
        assert_eq!(a.nrows(), self.m, "left factor rows");
        assert_eq!(b.nrows(), self.n, "right factor rows");
        assert!(a.ncols() == w.len() && b.ncols() == w.len(), "factor widths");
        self.a_blocks.push(a);
        self.weights.push(w);
        self.b_blocks.push(b);
    }

    /// Add `c * x`.
    pub fn push(&mut self, c: f64, x: &FactoredMatrix) -> Result<()> {
        if x.shape() != (self.m, self.n) {
            return Err(Error::ShapeMismatch {
                expected: (self.m, self.n),
                got: x.shape(),
            });
        }
        let w = x.s.iter().map(|s| c * s).collect();
        self.push_raw(x.u.clone(), w, x.v.clone());
        Ok(())
    }

    /// Append all terms of another sum scaled by `c`.
    pub fn extend_scaled(&mut self, c: f64, other: FactorSum) -> Result<()> {
        if other.shape() != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        for ((a, w), b) in other.a_blocks.into_iter().zip(other.weights).zip(other.b_blocks) {
            let w = w.into_iter().map(|x| c * x).collect();
            self.push_raw(a, w, b);
        }
        Ok(())
    }

    fn reduce(&self) -> Result<Option<ReducedCore>> {
        let total = self.width();
        let mut ua = DMatrix::zeros(self.m, total);
        let mut va = DMatrix::zeros(self.n, total);
        let mut ranges = Vec::with_capacity(self.a_blocks.len());
        let mut col = 0;
        for ((a, w), b) in self.a_blocks.iter().zip(&self.weights).zip(&self.b_blocks) {
            let start = col;
            for (l, &wl) in w.iter().enumerate() {
                if !wl.is_finite() {
                    return Err(Error::NonFinite("factor weights"));
                }
                let root = wl.abs().sqrt();
                let sign = if wl < 0.0 { -root } else { root };
                ua.column_mut(col).copy_from(&(a.column(l) * root));
                va.column_mut(col).copy_from(&(b.column(l) * sign));
                col += 1;
            }
            ranges.push((start, col));
        }
        if ua.iter().chain(va.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("stacked factors"));
        }
        let scale_u = (0..total).map(|j| ua.column(j).norm()).fold(0.0, f64::max);
        let scale_v = (0..total).map(|j| va.column(j).norm()).fold(0.0, f64::max);
        if scale_u == 0.0 || scale_v == 0.0 {
            return Ok(None);
        }
        let f1 = pivoted_qr(&ua, Some(STACK_QR_RTOL * scale_u));
        let f2 = pivoted_qr(&va, Some(STACK_QR_RTOL * scale_v));
        if f1.q.ncols() == 0 || f2.q.ncols() == 0 {
            return Ok(None);
        }
        let r1 = f1.r_unpermuted();
        let r2 = f2.r_unpermuted();
        Ok(Some(ReducedCore {
            q1: f1.q,
            q2: f2.q,
            r1,
            r2,
            ranges,
        }))
    }

    /// Round to SVD form; returns the result and the Frobenius norm of the
    /// discarded singular-value tail.
    pub fn round_with_tail(&self, spec: TruncationSpec) -> Result<(FactoredMatrix, f64)> {
        if self.is_empty() {
            return Ok((FactoredMatrix::zeros(self.m, self.n), 0.0));
        }
        let Some(core) = self.reduce()? else {
            return Ok((FactoredMatrix::zeros(self.m, self.n), 0.0));
        };
        let middle = &core.r1 * core.r2.transpose();
        let svd = linalg::svd_sorted(&middle)?;
        let r = spec.rank_for(svd.s.as_slice());
        let tail = linalg::tail_norm(svd.s.as_slice(), r);
        let u = &core.q1 * svd.u.columns(0, r);
        let v = &core.q2 * svd.v.columns(0, r);
        let s = svd.s.rows(0, r).map(|x| x.max(0.0));
        Ok((FactoredMatrix { u, s, v }, tail))
    }

    pub fn round(&self, spec: TruncationSpec) -> Result<FactoredMatrix> {
        self.round_with_tail(spec).map(|(x, _)| x)
    }

    /// Frobenius norm of the sum, computed on the reduced core.
    pub fn frobenius_norm(&self) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        match self.reduce()? {
            None => Ok(0.0),
            Some(core) => Ok((&core.r1 * core.r2.transpose()).norm()),
        }
    }
}

/// `T_round(sum_j c_j X_j)`: stack factors, reduce by pivoted QR, truncate
/// the SVD of the small core and map back.
pub fn round_sum(terms: &[(f64, &FactoredMatrix)], spec: TruncationSpec) -> Result<FactoredMatrix> {
    round_sum_with_tail(terms, spec).map(|(x, _)| x)
}

/// [`round_sum`] that also reports the discarded tail norm; when the
/// requested tolerance cannot be met within `r_max` the tail exceeds `eps`.
pub fn round_sum_with_tail(
    terms: &[(f64, &FactoredMatrix)],
    spec: TruncationSpec,
) -> Result<(FactoredMatrix, f64)> {
    let first = terms
        .first()
        .map(|(_, x)| *x)
        .ok_or_else(|| Error::InvalidArgument("round_sum needs at least one term".into()))?;
    let mut sum = FactorSum::new(first.nrows(), first.ncols());
    for (c, x) in terms {
        sum.push(*c, x)?;
    }
    sum.round_with_tail(spec)
}

/// `||A - B||_F` without forming either matrix.
pub fn diff_norm(a: &FactoredMatrix, b: &FactoredMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            got: b.shape(),
        });
    }
    let mut sum = FactorSum::new(a.nrows(), a.ncols());
    sum.push(1.0, a)?;
    sum.push(-1.0, b)?;
    sum.frobenius_norm()
}

/// Coefficients minimizing `||sum_j gamma_j D_j - B||_F`.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub gamma: Vec<f64>,
    /// Condition number estimate of the projected system.
    pub condition: f64,
    /// True if the minimum-norm SVD solution was used.
    pub min_norm: bool,
}

/// Low-rank least squares: project onto the joint column/row spaces of the
/// `D_j`, then solve the small vectorized problem.
pub fn lstsq_lowrank(d_terms: &[FactoredMatrix], b: &FactoredMatrix) -> Result<LstsqSolution> {
    if d_terms.is_empty() {
        return Ok(LstsqSolution {
            gamma: Vec::new(),
            condition: 1.0,
            min_norm: false,
        });
    }
    let shape = b.shape();
    let mut sum = FactorSum::new(shape.0, shape.1);
    for d in d_terms {
        sum.push(1.0, d)?;
    }
    let Some(core) = sum.reduce()? else {
        // Every D_j vanishes; any gamma is optimal and zero has minimum norm.
        return Ok(LstsqSolution {
            gamma: vec![0.0; d_terms.len()],
            condition: f64::INFINITY,
            min_norm: true,
        });
    };
    let (k1, k2) = (core.q1.ncols(), core.q2.ncols());
    let mut a = DMatrix::zeros(k1 * k2, d_terms.len());
    for (col, &(start, end)) in core.ranges.iter().enumerate() {
        let block = core.r1.columns(start, end - start) * core.r2.columns(start, end - start).transpose();
        a.column_mut(col).copy_from_slice(block.as_slice());
    }
    let mut left = core.q1.tr_mul(&b.u);
    for k in 0..b.rank() {
        left.column_mut(k).scale_mut(b.s[k]);
    }
    let right = core.q2.tr_mul(&b.v);
    let bproj = left * right.transpose();
    let rhs = DVector::from_column_slice(bproj.as_slice());
    let sol = linalg::lstsq(&a, &rhs)?;
    Ok(LstsqSolution {
        gamma: sol.x.iter().copied().collect(),
        condition: sol.condition,
        min_norm: sol.min_norm,
    })
}
