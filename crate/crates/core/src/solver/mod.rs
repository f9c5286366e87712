//! Anderson acceleration in low-rank form, and its dense counterpart.
//!
//! Both solvers run the same driver, [`anderson`], over an
//! [`AndersonSpace`] that supplies the arithmetic: factored matrices with
//! truncation for the low-rank solver, plain dense matrices for the
//! reference.

mod dense;
mod lowrank_space;

use std::collections::VecDeque;
use std::time::Instant;

pub use dense::{dense_aa_solve, DenseSpace};
pub use lowrank_space::{combination_compress, lraa_solve, CombinationOracle, LowRankSpace};

use crate::error::{Error, Result};
use crate::problems::{EvalStats, SolverHints};

/// How `X_{k+1}` is compressed from the combination of past evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationMode {
    CrossDeim,
    Rounding,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrAAConfig {
    /// Window size `m_hat >= 1`.
    pub window: usize,
    /// Scheduling factor in `(0, 1]`.
    pub theta: f64,
    /// Stopping tolerance on `rho_k`.
    pub tol: f64,
    /// Rounding tolerance of residuals and residual differences.
    pub eps_f: f64,
    /// Initial truncation tolerance of evaluations and combinations.
    pub eps_g0: f64,
    /// Rank cap; `None` means `min(m, n)`.
    pub r_max: Option<usize>,
    pub maxiter: usize,
    pub combination: CombinationMode,
    pub scheduling: bool,
    pub rng_seed: u64,
}

impl Default for LrAAConfig {
    fn default() -> Self {
        Self {
            window: 5,
            theta: 0.5,
            tol: 1e-10,
            eps_f: 1e-12,
            eps_g0: 1e-2,
            r_max: None,
            maxiter: 1000,
            combination: CombinationMode::CrossDeim,
            scheduling: true,
            rng_seed: 0,
        }
    }
}

impl LrAAConfig {
    pub fn from_hints(h: SolverHints) -> Self {
        Self {
            window: h.window,
            theta: h.theta,
            tol: h.tol,
            eps_g0: h.eps_g0,
            scheduling: h.scheduling,
            combination: h.combination,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidArgument("window must be >= 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be >= 0, got {}", self.tol)));
        }
        if !(self.eps_f >= 0.0 && self.eps_f <= self.eps_g0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= eps_F <= eps_G0, got eps_F={} eps_G0={}",
                self.eps_f, self.eps_g0
            )));
        }
        if self.r_max == Some(0) || self.maxiter == 0 {
            return Err(Error::InvalidArgument("r_max and maxiter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Diagnostics of one outer iteration. Record `k = 0` describes the
/// initial evaluation `G_0 = G(X_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub rho: f64,
    /// Truncation tolerance used for `G_k` and `X_{k+1}`.
    pub eps_g: f64,
    pub rank_x: usize,
    pub rank_g: usize,
    /// Rank of the new iterate `X_{k+1}`.
    pub rank_next: usize,
    pub eval: EvalStats,
    pub comb: EvalStats,
    /// Number of residual differences in the least-squares problem.
    pub window_len: usize,
    pub gamma_condition: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_rank: usize,
    pub records: Vec<IterationRecord>,
    pub total_samples: usize,
    pub total_cross_iterations: usize,
    /// Largest rank of any iterate or evaluation.
    pub max_rank: usize,
    pub wall_ms: f64,
}

impl SolveReport {
    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rho).collect()
    }
}

/// Ring buffers of the last `window + 1` iterates, evaluations and
/// residuals, and the last `window` residual differences.
#[derive(Debug, Clone)]
pub struct WindowBuffer<T> {
    window: usize,
    pub xs: VecDeque<T>,
    pub gs: VecDeque<T>,
    pub fs: VecDeque<T>,
    pub dfs: VecDeque<T>,
}

impl<T> WindowBuffer<T> {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            xs: VecDeque::new(),
            gs: VecDeque::new(),
            fs: VecDeque::new(),
            dfs: VecDeque::new(),
        }
    }

    /// Add `(X_k, G_k, F_k)` and, for `k >= 1`, `Delta F_{k-1}`.
    pub fn push(&mut self, x: T, g: T, f: T, df: Option<T>) {
        self.xs.push_back(x);
        self.gs.push_back(g);
        self.fs.push_back(f);
        if let Some(df) = df {
            self.dfs.push_back(df);
        }
        while self.gs.len() > self.window + 1 {
            self.xs.pop_front();
            self.gs.pop_front();
            self.fs.pop_front();
        }
        while self.dfs.len() > self.window {
            self.dfs.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.gs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gs.is_empty()
    }
}

/// `eps_G <- theta * rho_k`.
pub fn schedule_update(_eps_g: f64, rho_k: f64, theta: f64) -> f64 {
    theta * rho_k
}

/// Coefficients `c_0..c_m` of `G_{k-m}..G_k` in
/// `G_k - sum_i gamma_i (G_{k-m+i+1} - G_{k-m+i})`.
pub fn combination_coefficients(gamma: &[f64]) -> Vec<f64> {
    let m = gamma.len();
    let mut c = vec![0.0; m + 1];
    c[m] = 1.0;
    for (i, &g) in gamma.iter().enumerate() {
        c[i + 1] -= g;
        c[i] += g;
    }
    c
}

/// Arithmetic of one Anderson flavor.
pub trait AndersonSpace {
    type Item: Clone;

    /// `G(x)` at the current tolerance.
    fn evaluate(&mut self, x: &Self::Item) -> Result<(Self::Item, EvalStats)>;
    /// `||g - x||_F`.
    fn distance(&self, g: &Self::Item, x: &Self::Item) -> Result<f64>;
    /// `g - x`, rounded at the residual tolerance.
    fn difference(&self, a: &Self::Item, b: &Self::Item) -> Result<Self::Item>;
    /// `argmin_v ||f - sum_j v_j d_j||` and a conditioning estimate.
    fn least_squares(&self, d: &[Self::Item], f: &Self::Item) -> Result<(Vec<f64>, f64)>;
    /// `sum_j coeffs_j gs_j`, compressed with warm start `warm`.
    fn combine(&mut self, gs: &[&Self::Item], coeffs: &[f64], warm: &Self::Item) -> Result<(Self::Item, EvalStats)>;
    fn tolerance(&self) -> f64;
    fn set_tolerance(&mut self, eps: f64);
    fn rank(&self, x: &Self::Item) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndersonOptions {
    pub window: usize,
    pub tol: f64,
    pub maxiter: usize,
    /// Scheduling factor; `None` keeps the tolerance fixed.
    pub theta: Option<f64>,
}

/// Anderson acceleration (unconstrained form, unit relaxation).
///
/// `X_1 = G(X_0)`; at step `k` the residual `F_k = G_k - X_k` and the
/// differences `Delta F_i = F_{i+1} - F_i` of the last `min(window, k)`
/// steps define `gamma = argmin ||F_k - D_k gamma||`, and
/// `X_{k+1} = G_k - sum_i gamma_i (G_{k-m+i+1} - G_{k-m+i})`. The tolerance
/// update precedes the stopping test `rho_k < tol`, and `X_{k+1}` is
/// returned.
pub fn anderson<S: AndersonSpace>(
    space: &mut S,
    x0: &S::Item,
    opts: &AndersonOptions,
) -> Result<(S::Item, SolveReport)> {
    if opts.window == 0 || opts.maxiter == 0 {
        return Err(Error::InvalidArgument("window and maxiter must be >= 1".into()));
    }
    let start = Instant::now();
    let mut records = Vec::new();
    let mut max_rank = space.rank(x0);

    let t = Instant::now();
    let eps0 = space.tolerance();
    let (g0, st0) = space.evaluate(x0)?;
    let rho0 = space.distance(&g0, x0)?;
    if !rho0.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            value: rho0,
        });
    }
    let f0 = space.difference(&g0, x0)?;
    max_rank = max_rank.max(space.rank(&g0));
    records.push(IterationRecord {
        k: 0,
        rho: rho0,
        eps_g: eps0,
        rank_x: space.rank(x0),
        rank_g: space.rank(&g0),
        rank_next: space.rank(&g0),
        eval: st0,
        comb: EvalStats::default(),
        window_len: 0,
        gamma_condition: 1.0,
        wall_ms: t.elapsed().as_secs_f64() * 1e3,
    });
    let finish = |x: S::Item, records: Vec<IterationRecord>, converged: bool, space: &S, max_rank: usize| {
        let last = records.last().expect("at least one record");
        let totals = records.iter().fold((0, 0), |acc, r| {
            (
                acc.0 + r.eval.samples + r.comb.samples,
                acc.1 + r.eval.cross_iterations + r.comb.cross_iterations,
            )
        });
        let report = SolveReport {
            converged,
            iterations: last.k,
            final_residual: last.rho,
            final_rank: space.rank(&x),
            total_samples: totals.0,
            total_cross_iterations: totals.1,
            max_rank,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            records,
        };
        (x, report)
    };
    if rho0 < opts.tol {
        return Ok(finish(g0, records, true, space, max_rank));
    }

    let mut buf = WindowBuffer::new(opts.window);
    buf.push(x0.clone(), g0.clone(), f0, None);
    let mut x = g0;
    for k in 1..=opts.maxiter {
        let t = Instant::now();
        let eps_used = space.tolerance();
        let (g, st_eval) = space.evaluate(&x)?;
        let rho = space.distance(&g, &x)?;
        if !rho.is_finite() {
            return Err(Error::Diverged { iteration: k, value: rho });
        }
        let f = space.difference(&g, &x)?;
        let df = space.difference(&f, buf.fs.back().expect("nonempty window"))?;
        let (rank_x, rank_g) = (space.rank(&x), space.rank(&g));
        buf.push(x.clone(), g, f, Some(df));

        let (gamma, cond) = space.least_squares(buf.dfs.make_contiguous(), buf.fs.back().expect("nonempty"))?;
        let coeffs = combination_coefficients(&gamma);
        let first = buf.gs.len() - coeffs.len();
        let glist: Vec<&S::Item> = buf.gs.iter().skip(first).collect();
        let (next, st_comb) = space.combine(&glist, &coeffs, &x)?;
        if let Some(theta) = opts.theta {
            space.set_tolerance(schedule_update(eps_used, rho, theta));
        }
        let rank_next = space.rank(&next);
        max_rank = max_rank.max(rank_g).max(rank_next);
        records.push(IterationRecord {
            k,
            rho,
            eps_g: eps_used,
            rank_x,
            rank_g,
            rank_next,
            eval: st_eval,
            comb: st_comb,
            window_len: gamma.len(),
            gamma_condition: cond,
            wall_ms: t.elapsed().as_secs_f64() * 1e3,
        });
        x = next;
        if rho < opts.tol {
            return Ok(finish(x, records, true, space, max_rank));
        }
    }
    Ok(finish(x, records, false, space, max_rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_sum_to_one() {
        let c = combination_coefficients(&[0.3, -1.2, 2.0]);
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(c.len(), 4);
        assert_eq!(combination_coefficients(&[]), vec![1.0]);
        // G_k - g (G_k - G_{k-1}) = g G_{k-1} + (1 - g) G_k
        assert_eq!(combination_coefficients(&[0.25]), vec![0.25, 0.75]);
    }

    #[test]
    fn schedule_is_product() {
        assert_eq!(schedule_update(1e-2, 1e-4, 0.5), 5e-5);
        assert_eq!(schedule_update(1e-2, 0.0, 0.5), 0.0);
    }

    #[test]
    fn window_trims() {
        let mut w = WindowBuffer::new(2);
        w.push(0, 0, 0, None);
        for k in 1..6 {
            w.push(k, k, k, Some(k));
            assert_eq!(w.len(), (k + 1).min(3));
            assert_eq!(w.dfs.len(), k.min(2));
        }
        assert_eq!(w.gs.iter().copied().collect::<Vec<_>>(), vec![3, 4, 5]);
    }

    #[test]
    fn config_validation() {
        assert!(LrAAConfig::default().validate().is_ok());
        let bad = LrAAConfig {
            theta: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LrAAConfig {
            eps_f: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
