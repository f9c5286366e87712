//! Elliptic Monge-Ampere equation `u_xx u_yy - u_xy^2 = f` on `[0, 1]^2`
//! with the monotone 9-point fixed-point scheme
//!
//! ```text
//! h_ij = (a1 + a2)/2 - sqrt((a1 - a2)^2 + (a3 - a4)^2/4 + h^4 f_ij) / 2
//! ```
//!
//! where `a1..a4` are the averages of opposite neighbor pairs along the
//! axes and the two diagonals.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{fast_poisson_solve_with, BoundaryFn, Evaluator, FixedPointProblem, Grid2D, Neighborhood, SolverHints, StencilOracle};
use crate::cross::{cold_start, cross_deim, CrossConfig};
use crate::error::{Error, Result};
use crate::lowrank::{FactorSum, FactoredMatrix, TruncationSpec};
use crate::oracle::{EntryOracle, FnOracle};

/// Relaxation of the damped update `X + 0.9 (h(X) - X)`.
pub const MA_DAMPING: f64 = 0.9;

/// Stopping tolerance: fixed, or a multiple of the mesh width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaTolerance {
    Fixed(f64),
    MeshRelative(f64),
}

impl MaTolerance {
    pub fn resolve(self, h: f64) -> f64 {
        match self {
            MaTolerance::Fixed(t) => t,
            MaTolerance::MeshRelative(c) => c * h,
        }
    }
}

/// Exact solution `(2 sqrt 2 / 3) (x^2 + y^2)^(3/4)`.
pub fn ma_exact(x: f64, y: f64) -> f64 {
    2.0 * 2f64.sqrt() / 3.0 * (x * x + y * y).powf(0.75)
}

/// Forcing `1 / sqrt(x^2 + y^2)`.
pub fn ma_forcing(x: f64, y: f64) -> f64 {
    1.0 / (x * x + y * y).sqrt()
}

pub struct MongeAmpereProblem {
    grid: Grid2D,
    boundary: BoundaryFn,
    h4f: DMatrix<f64>,
    tol: f64,
    clamped: AtomicUsize,
}

/// Monge-Ampere problem on an equidistant `[0, 1]^2` grid with boundary
/// data and forcing from the exact solution.
pub fn monge_ampere_problem(grid: Grid2D, tol_mode: MaTolerance) -> Result<MongeAmpereProblem> {
    if grid.is_periodic() {
        return Err(Error::InvalidArgument("Monge-Ampere needs a Dirichlet grid".into()));
    }
    if (grid.hx - grid.hy).abs() > 1e-14 * grid.hx {
        return Err(Error::InvalidArgument(format!(
            "Monge-Ampere scheme needs hx = hy, got {} and {}",
            grid.hx, grid.hy
        )));
    }
    let grid = Grid2D {
        boundary: super::BoundaryKind::DirichletFromFunction,
        ..grid
    };
    let h4 = grid.hx.powi(4);
    let (xs, ys) = (grid.xs(), grid.ys());
    let h4f = DMatrix::from_fn(grid.m, grid.n, |i, j| h4 * ma_forcing(xs[i], ys[j]));
    Ok(MongeAmpereProblem {
        grid,
        boundary: Arc::new(ma_exact),
        h4f,
        tol: tol_mode.resolve(grid.hx),
        clamped: AtomicUsize::new(0),
    })
}

impl MongeAmpereProblem {
    /// `[0, 1]^2` with `points` grid points per direction counting both
    /// boundary points, i.e. `points - 2` unknowns and `h = 1/(points - 1)`.
    pub fn grid_with_points(points: usize) -> Result<Grid2D> {
        if points < 5 {
            return Err(Error::InvalidArgument(format!("need at least 5 grid points, got {points}")));
        }
        Grid2D::dirichlet_from_function(points - 2, points - 2, (0.0, 1.0), (0.0, 1.0))
    }

    /// `[0, 1]^2` with `m` interior points per direction, `h = 1/(m + 1)`.
    pub fn grid_with_interior(m: usize) -> Result<Grid2D> {
        Grid2D::dirichlet_from_function(m, m, (0.0, 1.0), (0.0, 1.0))
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn boundary(&self) -> &BoundaryFn {
        &self.boundary
    }

    /// Radicand clamps since the last call.
    pub fn take_clamped(&self) -> usize {
        self.clamped.swap(0, Ordering::Relaxed)
    }

    /// `h_ij` of the scheme for the neighborhood `nb`.
    pub fn scheme_value(&self, i: usize, j: usize, nb: &Neighborhood) -> f64 {
        let a1 = 0.5 * (nb.s + nb.n);
        let a2 = 0.5 * (nb.e + nb.w);
        let a3 = 0.5 * (nb.se + nb.nw);
        let a4 = 0.5 * (nb.sw + nb.ne);
        let mut rad = (a1 - a2).powi(2) + 0.25 * (a3 - a4).powi(2) + self.h4f[(i, j)];
        if rad < 0.0 {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            rad = 0.0;
        }
        0.5 * (a1 + a2) - 0.5 * rad.sqrt()
    }

    fn map_oracle<'a>(&'a self, x: &'a FactoredMatrix) -> impl EntryOracle + 'a {
        StencilOracle::new(x, self.grid, Some(self.boundary.clone()), move |i, j, nb: &Neighborhood| {
            let h = self.scheme_value(i, j, nb);
            Ok(nb.c + MA_DAMPING * (h - nb.c))
        })
    }

    /// Rank <= 4 contribution of the boundary values to the 5-point
    /// Laplacian: `Delta_h X + B` is the full-stencil Laplacian.
    pub fn boundary_term(&self) -> Result<FactoredMatrix> {
        let g = &self.grid;
        let (m, n) = (g.m, g.n);
        let (hx2, hy2) = (g.hx * g.hx, g.hy * g.hy);
        let mut sum = FactorSum::new(m, n);
        let unit = |len: usize, k: usize| {
            let mut e = DMatrix::zeros(len, 1);
            e[(k, 0)] = 1.0;
            e
        };
        let col = |vals: Vec<f64>| DMatrix::from_column_slice(vals.len(), 1, &vals);
        let north: Vec<f64> = (0..n as isize).map(|j| (self.boundary)(g.x(-1), g.y(j)) / hx2).collect();
        let south: Vec<f64> = (0..n as isize).map(|j| (self.boundary)(g.x(m as isize), g.y(j)) / hx2).collect();
        let west: Vec<f64> = (0..m as isize).map(|i| (self.boundary)(g.x(i), g.y(-1)) / hy2).collect();
        let east: Vec<f64> = (0..m as isize).map(|i| (self.boundary)(g.x(i), g.y(n as isize)) / hy2).collect();
        sum.push_raw(unit(m, 0), vec![1.0], col(north));
        sum.push_raw(unit(m, m - 1), vec![1.0], col(south));
        sum.push_raw(col(west), vec![1.0], unit(n, 0));
        sum.push_raw(col(east), vec![1.0], unit(n, n - 1));
        sum.round(TruncationSpec::exact())
    }

    /// Low-rank solution of the linear problem `u_xx + u_yy = sqrt(2 f)`
    /// with the same boundary data, truncated at `1e-10`.
    pub fn linear_initial_guess(&self, seed: u64) -> Result<FactoredMatrix> {
        let g = &self.grid;
        let (xs, ys) = (g.xs(), g.ys());
        let rhs = FnOracle::new(g.m, g.n, |i, j| (2.0 * ma_forcing(xs[i], ys[j])).sqrt());
        let (u0, v0) = cold_start(g.m, g.n, seed);
        let cfg = CrossConfig::new(1e-12, g.m, g.n).with_seed(seed);
        let (r, _) = cross_deim(&rhs, &u0, &v0, &cfg)?;
        let mut sum = FactorSum::new(g.m, g.n);
        sum.push(1.0, &r)?;
        sum.push(-1.0, &self.boundary_term()?)?;
        let rhs = sum.round(TruncationSpec::exact())?;
        fast_poisson_solve_with(&rhs, g, Some(TruncationSpec::with_eps(1e-10)))
    }

    /// Exact solution sampled at the interior points.
    pub fn exact_samples(&self) -> DMatrix<f64> {
        let (xs, ys) = (self.grid.xs(), self.grid.ys());
        DMatrix::from_fn(self.grid.m, self.grid.n, |i, j| ma_exact(xs[i], ys[j]))
    }

    pub fn exact_factored(&self) -> Result<FactoredMatrix> {
        crate::lowrank::truncated_svd_dense(&self.exact_samples(), TruncationSpec::with_eps(1e-14))
    }

    /// Forcing `h^4 f` at the interior points.
    pub fn h4_forcing(&self) -> &DMatrix<f64> {
        &self.h4f
    }
}

impl FixedPointProblem for MongeAmpereProblem {
    fn name(&self) -> &str {
        "monge-ampere"
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn evaluate(&self, x: &FactoredMatrix, ev: &mut Evaluator) -> Result<FactoredMatrix> {
        let out = ev.compress(&self.map_oracle(x), x);
        ev.note_clamped(self.take_clamped());
        out
    }

    fn oracle<'a>(&'a self, x: &'a FactoredMatrix) -> Result<Box<dyn EntryOracle + 'a>> {
        Ok(Box::new(self.map_oracle(x)))
    }

    fn initial_iterate(&self, seed: u64) -> Result<FactoredMatrix> {
        self.linear_initial_guess(seed)
    }

    fn hints(&self) -> SolverHints {
        SolverHints {
            window: 5,
            theta: 0.25,
            tol: self.tol,
            scheduling: true,
            eps_g0: 1e-2,
            ..SolverHints::default()
        }
    }

    fn exact_solution(&self, x: f64, y: f64) -> Option<f64> {
        Some(ma_exact(x, y))
    }
}
