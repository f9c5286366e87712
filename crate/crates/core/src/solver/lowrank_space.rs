use nalgebra::DMatrix;

use super::{anderson, AndersonOptions, AndersonSpace, CombinationMode, LrAAConfig, SolveReport};
use crate::error::{Error, Result};
use crate::lowrank::{diff_norm, lstsq_lowrank, round_sum, FactorSum, FactoredMatrix, TruncationSpec};
use crate::oracle::{check_index, EntryOracle};
use crate::problems::{EvalStats, Evaluator, FixedPointProblem};

/// Entries of `sum_j c_j G_j`.
pub struct CombinationOracle<'a> {
    terms: Vec<(f64, &'a FactoredMatrix)>,
    shape: (usize, usize),
}

impl<'a> CombinationOracle<'a> {
    pub fn new(gs: &[&'a FactoredMatrix], coeffs: &[f64]) -> Result<Self> {
        if gs.is_empty() || gs.len() != coeffs.len() {
            return Err(Error::InvalidArgument(format!(
                "combination needs matching nonempty terms, got {} matrices and {} coefficients",
                gs.len(),
                coeffs.len()
            )));
        }
        let shape = gs[0].shape();
        if let Some(g) = gs.iter().find(|g| g.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: shape,
                got: g.shape(),
            });
        }
        Ok(Self {
            terms: coeffs.iter().copied().zip(gs.iter().copied()).collect(),
            shape,
        })
    }
}

impl EntryOracle for CombinationOracle<'_> {
    fn nrows(&self) -> usize {
        self.shape.0
    }
    fn ncols(&self) -> usize {
        self.shape.1
    }
    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, j, self.shape.0, self.shape.1)?;
        let mut acc = 0.0;
        for (c, g) in &self.terms {
            acc += c * g.entry(i, j)?;
        }
        Ok(acc)
    }
    fn row_block(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(rows.len(), self.shape.1);
        for (c, g) in &self.terms {
            out += g.rows(rows)? * *c;
        }
        Ok(out)
    }
    fn col_block(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.shape.0, cols.len());
        for (c, g) in &self.terms {
            out += g.cols(cols)? * *c;
        }
        Ok(out)
    }
}

/// Compress `sum_j c_j G_j` where `c` are the combination coefficients of
/// `gamma` (see [`super::combination_coefficients`]): by exact rounding or
/// by Cross-DEIM warm-started from `warm`.
pub fn combination_compress(
    gs: &[&FactoredMatrix],
    gamma: &[f64],
    warm: &FactoredMatrix,
    spec: TruncationSpec,
    mode: CombinationMode,
    ev: &mut Evaluator,
) -> Result<FactoredMatrix> {
    let coeffs = super::combination_coefficients(gamma);
    compress_coefficients(gs, &coeffs, warm, spec, mode, ev)
}

fn compress_coefficients(
    gs: &[&FactoredMatrix],
    coeffs: &[f64],
    warm: &FactoredMatrix,
    spec: TruncationSpec,
    mode: CombinationMode,
    ev: &mut Evaluator,
) -> Result<FactoredMatrix> {
    if gs.len() != coeffs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} matrices for {} coefficients",
            gs.len(),
            coeffs.len()
        )));
    }
    if gs.len() == 1 && coeffs[0] == 1.0 {
        return Ok(gs[0].truncated(spec));
    }
    match mode {
        CombinationMode::Rounding => {
            let terms: Vec<(f64, &FactoredMatrix)> = coeffs.iter().copied().zip(gs.iter().copied()).collect();
            round_sum(&terms, spec)
        }
        CombinationMode::CrossDeim => {
            let oracle = CombinationOracle::new(gs, coeffs)?;
            ev.set_spec(spec);
            ev.compress(&oracle, warm)
        }
    }
}

/// Low-rank arithmetic driven by a [`FixedPointProblem`].
pub struct LowRankSpace<'a, P: ?Sized> {
    problem: &'a P,
    spec: TruncationSpec,
    residual_spec: TruncationSpec,
    mode: CombinationMode,
    ev: Evaluator,
}

impl<'a, P: FixedPointProblem + ?Sized> LowRankSpace<'a, P> {
    pub fn new(problem: &'a P, cfg: &LrAAConfig) -> Result<Self> {
        cfg.validate()?;
        let (m, n) = problem.shape();
        let r_max = cfg.r_max.unwrap_or(m.min(n));
        let spec = TruncationSpec::new(cfg.eps_g0, r_max)?;
        Ok(Self {
            problem,
            spec,
            residual_spec: TruncationSpec::new(cfg.eps_f, r_max)?,
            mode: cfg.combination,
            ev: Evaluator::new(spec, cfg.rng_seed),
        })
    }
}

impl<P: FixedPointProblem + ?Sized> AndersonSpace for LowRankSpace<'_, P> {
    type Item = FactoredMatrix;

    fn evaluate(&mut self, x: &FactoredMatrix) -> Result<(FactoredMatrix, EvalStats)> {
        self.ev.set_spec(self.spec);
        self.ev.take_stats();
        let g = self.problem.evaluate(x, &mut self.ev)?;
        Ok((g, self.ev.take_stats()))
    }

    fn distance(&self, g: &FactoredMatrix, x: &FactoredMatrix) -> Result<f64> {
        diff_norm(g, x)
    }

    fn difference(&self, a: &FactoredMatrix, b: &FactoredMatrix) -> Result<FactoredMatrix> {
        let mut sum = FactorSum::new(a.nrows(), a.ncols());
        sum.push(1.0, a)?;
        sum.push(-1.0, b)?;
        sum.round(self.residual_spec)
    }

    fn least_squares(&self, d: &[FactoredMatrix], f: &FactoredMatrix) -> Result<(Vec<f64>, f64)> {
        let sol = lstsq_lowrank(d, f)?;
        Ok((sol.gamma, sol.condition))
    }

    fn combine(
        &mut self,
        gs: &[&FactoredMatrix],
        coeffs: &[f64],
        warm: &FactoredMatrix,
    ) -> Result<(FactoredMatrix, EvalStats)> {
        self.ev.take_stats();
        let x = compress_coefficients(gs, coeffs, warm, self.spec, self.mode, &mut self.ev)?;
        Ok((x, self.ev.take_stats()))
    }

    fn tolerance(&self) -> f64 {
        self.spec.eps
    }

    fn set_tolerance(&mut self, eps: f64) {
        self.spec.eps = eps;
    }

    fn rank(&self, x: &FactoredMatrix) -> usize {
        x.rank()
    }
}

/// Low-rank Anderson acceleration for `G(X) = X` starting from `x0`.
pub fn lraa_solve<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &FactoredMatrix,
    cfg: &LrAAConfig,
) -> Result<(FactoredMatrix, SolveReport)> {
    if x0.shape() != problem.shape() {
        return Err(Error::ShapeMismatch {
            expected: problem.shape(),
            got: x0.shape(),
        });
    }
    let mut space = LowRankSpace::new(problem, cfg)?;
    anderson(
        &mut space,
        x0,
        &AndersonOptions {
            window: cfg.window,
            tol: cfg.tol,
            maxiter: cfg.maxiter,
            theta: cfg.scheduling.then_some(cfg.theta),
        },
    )
}
