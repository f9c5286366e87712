//! Allen-Cahn equation `u_t = nu Delta u + u - u^3` on the periodic square
//! `[0, 2 pi]^2`, backward Euler in time.
//!
//! Each step solves `X = X_prev + dt (nu Delta X + X - X^3)` as the fixed
//! point of
//!
//! ```text
//! G(X) = X + M (X_prev + dt (nu Delta X + X - X^3) - X)
//! ```
//!
//! with `M` the exponential-sum inverse of `I - dt nu Delta`.

use super::{laplace_terms, Evaluator, FixedPointProblem, Grid2D, SolverHints};
use crate::cross::{cold_start, cross_deim, CrossConfig};
use crate::error::{Error, Result};
use crate::lowrank::{FactorSum, FactoredMatrix};
use crate::oracle::{EntryOracle, FnOracle};
use crate::precond::{EsPreconditioner, EsWeights, SpectralOperator1D};
use crate::solver::{lraa_solve, LrAAConfig, SolveReport};

/// Initial condition of the benchmark.
pub fn allen_cahn_u0(x: f64, y: f64) -> f64 {
    let num = ((-x.tan().powi(2)).exp() + (-y.tan().powi(2)).exp()) * x.sin() * y.sin();
    let den = 1.0 + (1.0 / (-x / 2.0).sin()).abs().exp() + (1.0 / (-y / 2.0).sin()).abs().exp();
    let v = num / den;
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Initial condition sampled on `grid` and compressed by Cross-DEIM to
/// tolerance `eps`.
pub fn allen_cahn_initial(grid: &Grid2D, eps: f64, seed: u64) -> Result<FactoredMatrix> {
    let (xs, ys) = (grid.xs(), grid.ys());
    let g = FnOracle::new(grid.m, grid.n, |i, j| allen_cahn_u0(xs[i], ys[j]));
    let (u0, v0) = cold_start(grid.m, grid.n, seed);
    let cfg = CrossConfig::new(eps, grid.m, grid.n).with_seed(seed);
    Ok(cross_deim(&g, &u0, &v0, &cfg)?.0)
}

#[derive(Debug, Clone)]
pub struct AllenCahnConfig {
    pub nu: f64,
    pub dt: f64,
    pub steps: usize,
    pub solver: LrAAConfig,
    /// Cross-DEIM tolerance of the initial data relative to `solver.tol`.
    pub init_factor: f64,
}

impl Default for AllenCahnConfig {
    fn default() -> Self {
        Self {
            nu: 0.01,
            dt: 0.1,
            steps: 100,
            solver: LrAAConfig {
                tol: 1e-2,
                theta: 0.5,
                window: 5,
                scheduling: true,
                ..LrAAConfig::default()
            },
            init_factor: 0.1,
        }
    }
}

/// One backward-Euler step as a fixed-point problem.
pub struct AllenCahnStep<'a> {
    grid: Grid2D,
    nu: f64,
    dt: f64,
    x_prev: &'a FactoredMatrix,
    precond: &'a EsPreconditioner,
}

impl<'a> AllenCahnStep<'a> {
    pub fn new(
        grid: Grid2D,
        nu: f64,
        dt: f64,
        x_prev: &'a FactoredMatrix,
        precond: &'a EsPreconditioner,
    ) -> Result<Self> {
        if x_prev.shape() != grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                got: x_prev.shape(),
            });
        }
        Ok(Self {
            grid,
            nu,
            dt,
            x_prev,
            precond,
        })
    }

    fn cubic_oracle<'b>(&self, x: &'b FactoredMatrix) -> impl EntryOracle + 'b {
        CubeOracle(x)
    }
}

struct CubeOracle<'b>(&'b FactoredMatrix);

impl EntryOracle for CubeOracle<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }
    fn ncols(&self) -> usize {
        self.0.ncols()
    }
    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.0.entry(i, j)?.powi(3))
    }
    fn row_block(&self, rows: &[usize]) -> Result<nalgebra::DMatrix<f64>> {
        Ok(self.0.rows(rows)?.map(|v| v * v * v))
    }
    fn col_block(&self, cols: &[usize]) -> Result<nalgebra::DMatrix<f64>> {
        Ok(self.0.cols(cols)?.map(|v| v * v * v))
    }
}

impl FixedPointProblem for AllenCahnStep<'_> {
    fn name(&self) -> &str {
        "allen-cahn"
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn evaluate(&self, x: &FactoredMatrix, ev: &mut Evaluator) -> Result<FactoredMatrix> {
        let cube = ev.compress(&self.cubic_oracle(x), x)?;
        let (m, n) = self.grid.shape();
        let mut res = FactorSum::new(m, n);
        res.push(1.0, self.x_prev)?;
        res.extend_scaled(self.dt * self.nu, laplace_terms(x, &self.grid)?)?;
        res.push(self.dt - 1.0, x)?;
        res.push(-self.dt, &cube)?;
        let r = ev.round(&res)?;
        let mr = self.precond.apply(&r, ev.spec())?;
        let mut sum = FactorSum::new(m, n);
        sum.push(1.0, x)?;
        sum.push(1.0, &mr)?;
        ev.round(&sum)
    }

    fn initial_iterate(&self, _seed: u64) -> Result<FactoredMatrix> {
        Ok(self.x_prev.clone())
    }

    fn hints(&self) -> SolverHints {
        SolverHints {
            window: 5,
            theta: 0.5,
            tol: 1e-2,
            scheduling: true,
            eps_g0: 1e-2,
            ..SolverHints::default()
        }
    }
}

/// Exponential-sum inverse of `I - dt nu Delta` on a periodic grid, with
/// the identity split as `I/2` into each 1D factor.
pub fn allen_cahn_preconditioner(grid: &Grid2D, nu: f64, dt: f64, weights: EsWeights) -> Result<EsPreconditioner> {
    if !grid.is_periodic() {
        return Err(Error::InvalidArgument("Allen-Cahn needs a periodic grid".into()));
    }
    let c = dt * nu;
    let opx = SpectralOperator1D::periodic(grid.m, grid.hx).shifted(0.5, c);
    let opy = if grid.n == grid.m && grid.hx == grid.hy {
        opx.clone()
    } else {
        SpectralOperator1D::periodic(grid.n, grid.hy).shifted(0.5, c)
    };
    EsPreconditioner::new(weights, opx, opy)
}

/// Per-step results of a time-marching run.
#[derive(Debug, Clone)]
pub struct AllenCahnReport {
    pub steps: Vec<SolveReport>,
    pub final_state: FactoredMatrix,
}

impl AllenCahnReport {
    pub fn iterations(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.iterations).collect()
    }
}

/// Backward-Euler time stepper; each step warm-starts from the previous
/// state.
pub struct AllenCahnStepper {
    grid: Grid2D,
    cfg: AllenCahnConfig,
    precond: EsPreconditioner,
    state: FactoredMatrix,
    step: usize,
}

pub fn allen_cahn_stepper(
    grid: Grid2D,
    cfg: AllenCahnConfig,
    weights: EsWeights,
    initial: Option<FactoredMatrix>,
) -> Result<AllenCahnStepper> {
    cfg.solver.validate()?;
    if !(cfg.dt > 0.0 && cfg.nu >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and nu >= 0".into()));
    }
    let precond = allen_cahn_preconditioner(&grid, cfg.nu, cfg.dt, weights)?;
    let state = match initial {
        Some(x) => x,
        None => allen_cahn_initial(&grid, cfg.init_factor * cfg.solver.tol, cfg.solver.rng_seed)?,
    };
    Ok(AllenCahnStepper {
        grid,
        cfg,
        precond,
        state,
        step: 0,
    })
}

impl AllenCahnStepper {
    pub fn state(&self) -> &FactoredMatrix {
        &self.state
    }
    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn preconditioner(&self) -> &EsPreconditioner {
        &self.precond
    }

    /// Advance one step; fails with the step index if lrAA does not
    /// converge.
    pub fn step(&mut self) -> Result<SolveReport> {
        let mut solver = self.cfg.solver;
        solver.rng_seed = solver.rng_seed.wrapping_add(self.step as u64 + 1);
        let problem = AllenCahnStep::new(self.grid, self.cfg.nu, self.cfg.dt, &self.state, &self.precond)?;
        let (x, rep) = lraa_solve(&problem, &self.state, &solver)?;
        self.step += 1;
        if !rep.converged {
            return Err(Error::StepNotConverged {
                step: self.step,
                iterations: rep.iterations,
            });
        }
        self.state = x;
        Ok(rep)
    }

    /// Run the configured number of steps.
    pub fn run(mut self) -> Result<AllenCahnReport> {
        let mut steps = Vec::with_capacity(self.cfg.steps);
        for _ in 0..self.cfg.steps {
            steps.push(self.step()?);
        }
        Ok(AllenCahnReport {
            steps,
            final_state: self.state,
        })
    }
}
