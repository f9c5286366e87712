//! Exponential-sum approximate inverses of Kronecker-sum operators.
//!
//! For a symmetric positive definite `A = A_x (+) A_y` with spectrum in
//! `[lambda_min, lambda_max]`, the inverse is approximated by
//!
//! ```text
//! A^{-1} ~ (1/lambda_min) sum_k alpha_k exp(-beta_k A_x / lambda_min) (x) exp(-beta_k A_y / lambda_min)
//! ```
//!
//! and applied to a factored matrix one factor at a time through the
//! closed-form eigendecompositions of the 1D operators.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lowrank::{FactorSum, FactoredMatrix, TruncationSpec};

/// Pairs `(alpha_k, beta_k)` with `1/x ~ sum_k alpha_k exp(-beta_k x)` on `[1, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EsWeights {
    terms: Vec<(f64, f64)>,
    interval: f64,
    accuracy: f64,
}

/// Number of log-spaced sample points used to measure accuracy.
pub const ACCURACY_SAMPLES: usize = 10_000;

impl EsWeights {
    pub fn new(terms: Vec<(f64, f64)>, interval: f64, accuracy: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("exponential sum needs at least one term".into()));
        }
        if let Some((a, b)) = terms.iter().find(|(a, b)| !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "weights must be positive and finite, got alpha={a}, beta={b}"
            )));
        }
        if !(interval >= 1.0) {
            return Err(Error::InvalidArgument(format!("interval bound must be >= 1, got {interval}")));
        }
        Ok(Self {
            terms,
            interval,
            accuracy,
        })
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    /// Upper end `R` of the validity interval `[1, R]`.
    pub fn interval(&self) -> f64 {
        self.interval
    }
    /// Declared sup relative error on the validity interval.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// `sum_k alpha_k exp(-beta_k x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|(a, b)| a * (-b * x).exp()).sum()
    }

    /// Sup relative error against `1/x` on `samples` log-spaced points of
    /// `[1, r]`.
    pub fn measure(&self, r: f64, samples: usize) -> f64 {
        max_rel_error(&self.terms, r, samples)
    }

    /// Parse the text format: a header `n R accuracy`, then `n` lines
    /// `alpha beta`. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header `n R accuracy`".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header needs 3 fields, found {}", fields.len()),
            });
        }
        let count: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: hline,
            msg: format!("invalid term count `{}`", fields[0]),
        })?;
        let interval = parse_f64(fields[1], hline)?;
        let accuracy = parse_f64(fields[2], hline)?;
        let mut terms = Vec::with_capacity(count);
        let mut last_line = hline;
        for (lno, line) in lines {
            last_line = lno;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("expected `alpha beta`, found {} fields", f.len()),
                });
            }
            let a = parse_f64(f[0], lno)?;
            let b = parse_f64(f[1], lno)?;
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("weights must be positive, got alpha={a}, beta={b}"),
                });
            }
            terms.push((a, b));
        }
        if terms.len() != count {
            return Err(Error::Parse {
                line: last_line,
                msg: format!("header declares {count} terms, found {}", terms.len()),
            });
        }
        Self::new(terms, interval, accuracy).map_err(|e| Error::Parse {
            line: hline,
            msg: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {:e} {:e}", self.terms.len(), self.interval, self.accuracy);
        for (a, b) in &self.terms {
            let _ = writeln!(out, "{a:.17e} {b:.17e}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Sinc-quadrature weights for `1/x = int_R exp(s - x e^s) ds` with
    /// `n_terms` equispaced nodes `s_k = s_0 + k h`, giving
    /// `beta_k = e^{s_k}` and `alpha_k = h e^{s_k}`.
    ///
    /// The step and the window offset are chosen to minimize the measured
    /// sup relative error on `[1, r]`; the achieved error on
    /// [`ACCURACY_SAMPLES`] points is stored as the declared accuracy.
    pub fn generate(n_terms: usize, r: f64) -> Result<Self> {
        if n_terms == 0 {
            return Err(Error::InvalidArgument("need at least one term".into()));
        }
        if !(r > 1.0) {
            return Err(Error::InvalidArgument(format!("interval bound must exceed 1, got {r}")));
        }
        let span_of = |h: f64| (n_terms.saturating_sub(1)) as f64 * h;
        let mut best: Option<(f64, Vec<(f64, f64)>)> = None;
        let mut h = 0.05;
        while h <= 2.5 {
            let s_lo = balance_offset(span_of(h), r);
            let terms = sinc_terms(n_terms, h, s_lo);
            let err = max_rel_error(&terms, r, 1500);
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, terms));
            }
            h += 0.01;
        }
        let (_, terms) = best.expect("at least one candidate");
        let accuracy = max_rel_error(&terms, r, ACCURACY_SAMPLES);
        Self::new(terms, r, accuracy)
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid number `{s}`"),
    })
}

fn sinc_terms(n: usize, h: f64, s_lo: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let t = (s_lo + k as f64 * h).exp();
            (h * t, t)
        })
        .collect()
}

/// Offset `s_lo` equating the lower truncation error `r e^{s_lo}` with the
/// upper one `exp(-e^{s_lo + span})`.
fn balance_offset(span: f64, r: f64) -> f64 {
    let f = |s: f64| (r.ln() + s) + (s + span).exp();
    let (mut lo, mut hi) = (-200.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn max_rel_error(terms: &[(f64, f64)], r: f64, samples: usize) -> f64 {
    let lr = r.ln();
    let mut worst = 0.0f64;
    for i in 0..samples {
        let x = if samples == 1 {
            1.0
        } else {
            (lr * i as f64 / (samples - 1) as f64).exp()
        };
        let approx: f64 = terms.iter().map(|(a, b)| a * (-b * x).exp()).sum();
        worst = worst.max((approx * x - 1.0).abs());
    }
    worst
}

/// Boundary treatment of a 1D second-difference operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Dirichlet,
    Periodic,
}

/// `shift * I + scale * (-D)` for the 1D second difference `D` on `n`
/// points with spacing `h`, with its orthonormal eigenbasis (sine basis
/// for Dirichlet, real Fourier basis for periodic).
#[derive(Debug, Clone)]
pub struct SpectralOperator1D {
    kind: OperatorKind,
    h: f64,
    shift: f64,
    scale: f64,
    base_eigs: Arc<Vec<f64>>,
    basis: Arc<DMatrix<f64>>,
}

impl SpectralOperator1D {
    /// `-D_xx` with homogeneous Dirichlet ends.
    pub fn dirichlet(n: usize, h: f64) -> Self {
        let np1 = (n + 1) as f64;
        let eigs: Vec<f64> = (1..=n)
            .map(|k| 4.0 / (h * h) * (k as f64 * PI / (2.0 * np1)).sin().powi(2))
            .collect();
        let c = (2.0 / np1).sqrt();
        let basis = DMatrix::from_fn(n, n, |i, k| c * (((i + 1) * (k + 1)) as f64 * PI / np1).sin());
        Self {
            kind: OperatorKind::Dirichlet,
            h,
            shift: 0.0,
            scale: 1.0,
            base_eigs: Arc::new(eigs),
            basis: Arc::new(basis),
        }
    }

    /// `-D_xx` on a periodic grid of `n` points.
    pub fn periodic(n: usize, h: f64) -> Self {
        let nf = n as f64;
        let mut eigs = Vec::with_capacity(n);
        let mut basis = DMatrix::zeros(n, n);
        let lam = |k: usize| 4.0 / (h * h) * (PI * k as f64 / nf).sin().powi(2);
        let mut col = 0;
        for i in 0..n {
            basis[(i, col)] = 1.0 / nf.sqrt();
        }
        eigs.push(lam(0));
        col += 1;
        let c = (2.0 / nf).sqrt();
        let mut k = 1;
        while 2 * k < n {
            for i in 0..n {
                let ang = 2.0 * PI * (k * i) as f64 / nf;
                basis[(i, col)] = c * ang.cos();
                basis[(i, col + 1)] = c * ang.sin();
            }
            eigs.push(lam(k));
            eigs.push(lam(k));
            col += 2;
            k += 1;
        }
        if n.is_multiple_of(2) && n > 1 {
            for i in 0..n {
                basis[(i, col)] = if i % 2 == 0 { 1.0 } else { -1.0 } / nf.sqrt();
            }
            eigs.push(lam(n / 2));
        }
        Self {
            kind: OperatorKind::Periodic,
            h,
            shift: 0.0,
            scale: 1.0,
            base_eigs: Arc::new(eigs),
            basis: Arc::new(basis),
        }
    }

    /// `shift * I + scale * self` (applied to the unshifted base operator).
    pub fn shifted(&self, shift: f64, scale: f64) -> Self {
        Self {
            shift,
            scale,
            ..self.clone()
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }
    pub fn dim(&self) -> usize {
        self.base_eigs.len()
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Eigenvalues aligned with the basis columns.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.base_eigs.iter().map(|l| self.shift + self.scale * l).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Orthogonal eigenbasis (columns).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Coefficients in the eigenbasis: `B^T x`.
    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.tr_mul(x)
    }

    /// Back to grid values: `B y`.
    pub fn inverse(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &*self.basis * y
    }

    /// `exp(-t A) x`.
    pub fn apply_exp(&self, t: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = self.forward(x);
        for (i, l) in self.eigenvalues().iter().enumerate() {
            let f = (-t * l).exp();
            y.row_mut(i).scale_mut(f);
        }
        self.inverse(&y)
    }

    /// `A x` using the stencil.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut y = x * self.shift;
        for c in 0..x.ncols() {
            for i in 0..n {
                let left = if i > 0 {
                    x[(i - 1, c)]
                } else if self.kind == OperatorKind::Periodic {
                    x[(n - 1, c)]
                } else {
                    0.0
                };
                let right = if i + 1 < n {
                    x[(i + 1, c)]
                } else if self.kind == OperatorKind::Periodic {
                    x[(0, c)]
                } else {
                    0.0
                };
                y[(i, c)] += self.scale * inv_h2 * (2.0 * x[(i, c)] - left - right);
            }
        }
        y
    }
}

/// Weights rescaled for the spectral interval `[lambda_min, lambda_max]`:
/// `1/lambda ~ sum_k coef_k exp(-rate_k lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EsScaling {
    /// `(alpha_k / lambda_min, beta_k / lambda_min)`.
    pub terms: Vec<(f64, f64)>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl EsScaling {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|(a, b)| a * (-b * x).exp()).sum()
    }
}

/// Rescale weights valid on `[1, R]` to `[lambda_min, lambda_max]`.
pub fn es_scale_for_operator(weights: &EsWeights, lambda_min: f64, lambda_max: f64) -> Result<EsScaling> {
    if !(lambda_min > 0.0 && lambda_max >= lambda_min) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
        )));
    }
    let ratio = lambda_max / lambda_min;
    if ratio > weights.interval() * (1.0 + 1e-12) {
        return Err(Error::SpectralRange {
            ratio,
            limit: weights.interval(),
        });
    }
    Ok(EsScaling {
        terms: weights
            .terms()
            .iter()
            .map(|(a, b)| (a / lambda_min, b / lambda_min))
            .collect(),
        lambda_min,
        lambda_max,
    })
}

/// Exponential-sum approximate inverse of `opx (+) opy`.
#[derive(Debug, Clone)]
pub struct EsPreconditioner {
    weights: EsWeights,
    opx: SpectralOperator1D,
    opy: SpectralOperator1D,
    scaling: EsScaling,
}

impl EsPreconditioner {
    pub fn new(weights: EsWeights, opx: SpectralOperator1D, opy: SpectralOperator1D) -> Result<Self> {
        let lmin = opx.min_eigenvalue() + opy.min_eigenvalue();
        let lmax = opx.max_eigenvalue() + opy.max_eigenvalue();
        let scaling = es_scale_for_operator(&weights, lmin, lmax)?;
        Ok(Self {
            weights,
            opx,
            opy,
            scaling,
        })
    }

    pub fn weights(&self) -> &EsWeights {
        &self.weights
    }
    pub fn scaling(&self) -> &EsScaling {
        &self.scaling
    }
    pub fn opx(&self) -> &SpectralOperator1D {
        &self.opx
    }
    pub fn opy(&self) -> &SpectralOperator1D {
        &self.opy
    }

    /// `M R ~ A^{-1} R`: sum of `n_ES` factored terms built in the
    /// eigenbases, rounded at `spec`, then mapped back.
    pub fn apply(&self, residual: &FactoredMatrix, spec: TruncationSpec) -> Result<FactoredMatrix> {
        let (m, n) = residual.shape();
        if m != self.opx.dim() || n != self.opy.dim() {
            return Err(Error::ShapeMismatch {
                expected: (self.opx.dim(), self.opy.dim()),
                got: (m, n),
            });
        }
        let uh = self.opx.forward(residual.u());
        let vh = self.opy.forward(residual.v());
        let lx = self.opx.eigenvalues();
        let ly = self.opy.eigenvalues();
        let mut sum = FactorSum::new(m, n);
        for &(coef, rate) in &self.scaling.terms {
            let mut a = uh.clone();
            for (i, l) in lx.iter().enumerate() {
                a.row_mut(i).scale_mut((-rate * l).exp());
            }
            let mut b = vh.clone();
            for (j, l) in ly.iter().enumerate() {
                b.row_mut(j).scale_mut((-rate * l).exp());
            }
            let w = residual.s().iter().map(|s| coef * s).collect();
            sum.push_raw(a, w, b);
        }
        let rounded = sum.round(spec)?;
        let u = self.opx.inverse(rounded.u());
        let v = self.opy.inverse(rounded.v());
        FactoredMatrix::from_parts(u, rounded.s().clone(), v)
    }
}

/// Exponential-sum approximation of `L^{-1} R` for the Laplacian
/// `L = D_xx (+) D_yy`, where `opx = -D_xx` and `opy = -D_yy`:
/// `-sum_k alpha_k (e^{beta_k D_xx} U) S (e^{beta_k D_yy} V)^T`.
pub fn es_apply(
    weights: &EsWeights,
    opx: &SpectralOperator1D,
    opy: &SpectralOperator1D,
    residual: &FactoredMatrix,
    spec: TruncationSpec,
) -> Result<FactoredMatrix> {
    let pre = EsPreconditioner::new(weights.clone(), opx.clone(), opy.clone())?;
    Ok(pre.apply(residual, spec)?.scaled(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_single_term() {
        let w = EsWeights::parse("1 10 1e-1\n1.0 1.0\n").unwrap();
        assert_eq!(w.terms(), &[(1.0, 1.0)]);
        assert_eq!(w.interval(), 10.0);
        assert_eq!(w.accuracy(), 0.1);
    }

    #[test]
    fn parse_comments_and_errors() {
        let w = EsWeights::parse("# generated\n2 10 1e-1\n# first\n1.0 1.0\n2.0 0.5\n").unwrap();
        assert_eq!(w.len(), 2);
        let e = EsWeights::parse("1 10 1e-1\n1.0 -1.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = EsWeights::parse("2 10 1e-1\n1.0 1.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = EsWeights::parse("1 10\n1.0 1.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = EsWeights::parse("1 10 0.1\n1.0 abc\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn scaling_identity_at_unit_min() {
        let w = EsWeights::parse("1 10 1e-1\n1.0 2.0\n").unwrap();
        let s = es_scale_for_operator(&w, 1.0, 5.0).unwrap();
        assert_eq!(s.terms, vec![(1.0, 2.0)]);
        assert!(matches!(
            es_scale_for_operator(&w, 1.0, 50.0),
            Err(Error::SpectralRange { .. })
        ));
    }

    #[test]
    fn real_fourier_basis_orthogonal() {
        for n in [7usize, 8] {
            let op = SpectralOperator1D::periodic(n, 0.3);
            let b = op.basis();
            let e = (b.tr_mul(b) - DMatrix::identity(n, n)).amax();
            assert!(e < 1e-13, "n={n}: {e}");
            let x = DMatrix::from_fn(n, 2, |i, j| ((i * 3 + j) as f64).sin());
            let y = op.inverse(&op.forward(&x));
            assert!((y - x).amax() < 1e-13);
        }
    }

    #[test]
    fn eigenpairs_match_stencil() {
        for op in [
            SpectralOperator1D::dirichlet(9, 0.1),
            SpectralOperator1D::periodic(10, 0.2).shifted(0.5, 0.01),
        ] {
            let b = op.basis().clone();
            let ab = op.apply(&b);
            let eigs = op.eigenvalues();
            for k in 0..op.dim() {
                let d = (ab.column(k) - b.column(k) * eigs[k]).amax();
                assert!(d < 1e-10 * op.max_eigenvalue(), "col {k}: {d}");
            }
        }
    }
}
