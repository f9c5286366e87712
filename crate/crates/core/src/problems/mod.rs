//! Benchmark matrices and discretized PDE fixed-point maps.

use std::sync::Arc;

use nalgebra::DVector;

use crate::cross::{cross_deim, CrossConfig, CrossDiagnostics};
use crate::error::{Error, Result};
use crate::lowrank::{FactorSum, FactoredMatrix, TruncationSpec};
use crate::oracle::EntryOracle;
use crate::solver::CombinationMode;

mod allen_cahn;
mod bratu;
mod laplace;
mod monge_ampere;
mod stencil;
mod test_matrices;

pub use allen_cahn::{
    allen_cahn_initial, allen_cahn_preconditioner, allen_cahn_stepper, allen_cahn_u0, AllenCahnConfig,
    AllenCahnReport, AllenCahnStep, AllenCahnStepper,
};
pub use bratu::{bratu_problem, BratuProblem};
pub use laplace::{
    apply_second_difference, fast_poisson_solve, fast_poisson_solve_with, laplace_apply, laplace_forcing,
    laplace_preconditioner, laplace_problem, laplace_terms, LaplaceProblem,
};
pub use monge_ampere::{ma_exact, ma_forcing, monge_ampere_problem, MaTolerance, MongeAmpereProblem, MA_DAMPING};
pub use stencil::{Neighborhood, StencilOracle};
pub use test_matrices::{boxed_test_oracle, make_test_oracle, TestMatrix};

/// How values outside the interior grid are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    HomogeneousDirichlet,
    DirichletFromFunction,
    Periodic,
}

/// Equidistant tensor grid of interior points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub m: usize,
    pub n: usize,
    pub hx: f64,
    pub hy: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub boundary: BoundaryKind,
}

impl Grid2D {
    /// Dirichlet grid: `hx = (x1 - x0) / (m + 1)`, interior points
    /// `x0 + (i + 1) hx` for `i = 0..m`.
    pub fn dirichlet(m: usize, n: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self> {
        Self::build(m, n, x_range, y_range, BoundaryKind::HomogeneousDirichlet)
    }

    /// Same points as [`Grid2D::dirichlet`], boundary values from a function.
    pub fn dirichlet_from_function(
        m: usize,
        n: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Result<Self> {
        Self::build(m, n, x_range, y_range, BoundaryKind::DirichletFromFunction)
    }

    /// Periodic grid: `hx = (x1 - x0) / m`, points `x0 + i hx`.
    pub fn periodic(m: usize, n: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self> {
        Self::build(m, n, x_range, y_range, BoundaryKind::Periodic)
    }

    fn build(m: usize, n: usize, x_range: (f64, f64), y_range: (f64, f64), boundary: BoundaryKind) -> Result<Self> {
        if m < 3 || n < 3 {
            return Err(Error::InvalidArgument(format!("grid needs at least 3x3 points, got {m}x{n}")));
        }
        let lx = x_range.1 - x_range.0;
        let ly = y_range.1 - y_range.0;
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidArgument("grid ranges must have positive length".into()));
        }
        let (dx, dy) = match boundary {
            BoundaryKind::Periodic => (m as f64, n as f64),
            _ => ((m + 1) as f64, (n + 1) as f64),
        };
        Ok(Self {
            m,
            n,
            hx: lx / dx,
            hy: ly / dy,
            x_range,
            y_range,
            boundary,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == BoundaryKind::Periodic
    }

    /// Coordinate of row index `i`; `-1` and `m` give the Dirichlet
    /// boundary points.
    pub fn x(&self, i: isize) -> f64 {
        match self.boundary {
            BoundaryKind::Periodic => self.x_range.0 + i as f64 * self.hx,
            _ => self.x_range.0 + (i + 1) as f64 * self.hx,
        }
    }

    pub fn y(&self, j: isize) -> f64 {
        match self.boundary {
            BoundaryKind::Periodic => self.y_range.0 + j as f64 * self.hy,
            _ => self.y_range.0 + (j + 1) as f64 * self.hy,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.m as isize).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.n as isize).map(|j| self.y(j)).collect()
    }
}

/// Dirichlet data `g(x, y)`.
pub type BoundaryFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The zero boundary function.
pub fn zero_boundary() -> BoundaryFn {
    Arc::new(|_, _| 0.0)
}

/// Cross-DEIM work done while evaluating a map or compressing a
/// combination.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalStats {
    pub cross_calls: usize,
    pub cross_iterations: usize,
    pub cross_max_rank: usize,
    pub samples: usize,
    /// Calls that hit the iteration cap.
    pub cross_unconverged: usize,
    /// Negative radicands clamped to zero (Monge-Ampere).
    pub clamped: usize,
}

impl EvalStats {
    pub fn record(&mut self, d: &CrossDiagnostics) {
        self.cross_calls += 1;
        self.cross_iterations += d.iterations;
        self.cross_max_rank = self.cross_max_rank.max(d.max_intermediate_rank);
        self.samples += d.samples;
        if !d.converged {
            self.cross_unconverged += 1;
        }
    }

    pub fn merge(&mut self, other: &EvalStats) {
        self.cross_calls += other.cross_calls;
        self.cross_iterations += other.cross_iterations;
        self.cross_max_rank = self.cross_max_rank.max(other.cross_max_rank);
        self.samples += other.samples;
        self.cross_unconverged += other.cross_unconverged;
        self.clamped += other.clamped;
    }
}

/// Compression context handed to [`FixedPointProblem::evaluate`]: the
/// current truncation tolerance, the seed stream for Cross-DEIM, and the
/// accumulated statistics.
#[derive(Debug, Clone)]
pub struct Evaluator {
    spec: TruncationSpec,
    seed: u64,
    calls: u64,
    cross_maxiter: usize,
    stats: EvalStats,
}

impl Evaluator {
    pub fn new(spec: TruncationSpec, seed: u64) -> Self {
        Self {
            spec,
            seed,
            calls: 0,
            cross_maxiter: 100,
            stats: EvalStats::default(),
        }
    }

    pub fn spec(&self) -> TruncationSpec {
        self.spec
    }

    pub fn eps(&self) -> f64 {
        self.spec.eps
    }

    pub fn set_spec(&mut self, spec: TruncationSpec) {
        self.spec = spec;
    }

    pub fn stats(&self) -> &EvalStats {
        &self.stats
    }

    pub fn take_stats(&mut self) -> EvalStats {
        std::mem::take(&mut self.stats)
    }

    pub fn note_clamped(&mut self, count: usize) {
        self.stats.clamped += count;
    }

    fn next_seed(&mut self) -> u64 {
        self.calls += 1;
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.calls.wrapping_mul(0xD1B5_4A32_D192_ED03))
    }

    /// Cross-DEIM of `g` at the current tolerance, warm-started from the
    /// singular vectors of `warm`.
    pub fn compress(&mut self, g: &dyn EntryOracle, warm: &FactoredMatrix) -> Result<FactoredMatrix> {
        self.compress_with_eps(g, warm, self.spec.eps)
    }

    pub fn compress_with_eps(
        &mut self,
        g: &dyn EntryOracle,
        warm: &FactoredMatrix,
        eps: f64,
    ) -> Result<FactoredMatrix> {
        let (m, n) = (g.nrows(), g.ncols());
        let mut cfg = CrossConfig::new(eps, m, n).with_seed(self.next_seed());
        cfg.r_max = self.spec.r_max.min(m.min(n));
        cfg.maxiter = self.cross_maxiter;
        let (x, d) = cross_deim(g, warm.u(), warm.v(), &cfg)?;
        self.stats.record(&d);
        Ok(x)
    }

    /// Exact-then-truncate rounding at the current tolerance.
    pub fn round(&self, sum: &FactorSum) -> Result<FactoredMatrix> {
        sum.round(self.spec)
    }
}

/// Parameters a problem recommends to the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverHints {
    pub window: usize,
    pub theta: f64,
    pub tol: f64,
    pub scheduling: bool,
    pub eps_g0: f64,
    pub combination: CombinationMode,
}

impl Default for SolverHints {
    fn default() -> Self {
        Self {
            window: 5,
            theta: 0.5,
            tol: 1e-10,
            scheduling: true,
            eps_g0: 1e-2,
            combination: CombinationMode::CrossDeim,
        }
    }
}

/// A nonlinear matrix equation `G(X) = X` on a grid.
///
/// `evaluate` returns the compressed `G(X)`: entrywise maps are sampled
/// through Cross-DEIM warm-started from `X`, linear pieces are formed in
/// factored algebra and rounded.
pub trait FixedPointProblem: Sync {
    fn name(&self) -> &str;
    fn grid(&self) -> &Grid2D;

    fn shape(&self) -> (usize, usize) {
        self.grid().shape()
    }

    fn evaluate(&self, x: &FactoredMatrix, ev: &mut Evaluator) -> Result<FactoredMatrix>;

    /// Entry oracle of `G(X)`. The default evaluates with roundoff-level
    /// truncation; stencil maps return their matrix-free oracle.
    fn oracle<'a>(&'a self, x: &'a FactoredMatrix) -> Result<Box<dyn EntryOracle + 'a>> {
        let mut ev = Evaluator::new(TruncationSpec::with_eps(1e-14 * x.frobenius_norm().max(1e-300)), 0);
        Ok(Box::new(self.evaluate(x, &mut ev)?))
    }

    fn initial_iterate(&self, seed: u64) -> Result<FactoredMatrix>;

    fn hints(&self) -> SolverHints {
        SolverHints::default()
    }

    /// Exact continuous solution at a point, when known.
    fn exact_solution(&self, _x: f64, _y: f64) -> Option<f64> {
        None
    }
}

/// Rank-1 factored samples `a(x_i) b(y_j)` of a separable function.
pub(crate) fn separable(a: &[f64], b: &[f64]) -> Result<FactoredMatrix> {
    FactoredMatrix::outer(&DVector::from_column_slice(a), &DVector::from_column_slice(b))
}

/// Identity map, the trivial fixed-point problem.
pub struct IdentityProblem {
    grid: Grid2D,
    start: FactoredMatrix,
}

impl IdentityProblem {
    pub fn new(start: FactoredMatrix) -> Result<Self> {
        let (m, n) = start.shape();
        let grid = Grid2D::dirichlet(m.max(3), n.max(3), (0.0, 1.0), (0.0, 1.0))?;
        Ok(Self {
            grid: Grid2D { m, n, ..grid },
            start,
        })
    }
}

impl FixedPointProblem for IdentityProblem {
    fn name(&self) -> &str {
        "identity"
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn evaluate(&self, x: &FactoredMatrix, _ev: &mut Evaluator) -> Result<FactoredMatrix> {
        Ok(x.clone())
    }
    fn initial_iterate(&self, _seed: u64) -> Result<FactoredMatrix> {
        Ok(self.start.clone())
    }
}
