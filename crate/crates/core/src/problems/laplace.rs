//! Poisson equation `Delta u = f` on `[-1, 1]^2` with homogeneous Dirichlet
//! conditions, iterated by (preconditioned) Richardson.

use nalgebra::{DMatrix, DVector};

use super::{separable, Evaluator, FixedPointProblem, Grid2D, SolverHints};
use crate::cross::cold_start;
use crate::error::{Error, Result};
use crate::lowrank::{truncated_svd_dense, FactorSum, FactoredMatrix, TruncationSpec};
use crate::precond::{EsPreconditioner, EsWeights, SpectralOperator1D};
use crate::solver::CombinationMode;

/// `D u` for the 1D second difference `(u_{i-1} - 2 u_i + u_{i+1}) / h^2`,
/// applied to every column of `u`, with zero (or wrapped) ends.
pub fn apply_second_difference(u: &DMatrix<f64>, h: f64, periodic: bool) -> DMatrix<f64> {
    let n = u.nrows();
    let inv = 1.0 / (h * h);
    let mut out = DMatrix::zeros(n, u.ncols());
    for c in 0..u.ncols() {
        let col = u.column(c);
        for i in 0..n {
            let left = if i > 0 {
                col[i - 1]
            } else if periodic {
                col[n - 1]
            } else {
                0.0
            };
            let right = if i + 1 < n {
                col[i + 1]
            } else if periodic {
                col[0]
            } else {
                0.0
            };
            out[(i, c)] = inv * (left - 2.0 * col[i] + right);
        }
    }
    out
}

fn check_grid(x: &FactoredMatrix, grid: &Grid2D) -> Result<()> {
    if x.shape() != grid.shape() {
        return Err(Error::ShapeMismatch {
            expected: grid.shape(),
            got: x.shape(),
        });
    }
    Ok(())
}

/// Unrounded factors of `D_xx X + X D_yy^T` (width `2r`).
pub fn laplace_terms(x: &FactoredMatrix, grid: &Grid2D) -> Result<FactorSum> {
    check_grid(x, grid)?;
    let p = grid.is_periodic();
    let s = x.s().as_slice().to_vec();
    let mut sum = FactorSum::new(grid.m, grid.n);
    sum.push_raw(apply_second_difference(x.u(), grid.hx, p), s.clone(), x.v().clone());
    sum.push_raw(x.u().clone(), s, apply_second_difference(x.v(), grid.hy, p));
    Ok(sum)
}

/// `D_xx X + X D_yy^T` as a factored matrix of rank at most `2r`.
pub fn laplace_apply(x: &FactoredMatrix, grid: &Grid2D) -> Result<FactoredMatrix> {
    laplace_terms(x, grid)?.round(TruncationSpec::exact())
}

/// Samples of `f(x, y) = -25 exp(-36 (x - 0.52)^2) exp(-36 (y - 0.5)^2)`,
/// exactly rank one.
pub fn laplace_forcing(grid: &Grid2D) -> Result<FactoredMatrix> {
    let a: Vec<f64> = grid.xs().iter().map(|x| -25.0 * (-36.0 * (x - 0.52).powi(2)).exp()).collect();
    let b: Vec<f64> = grid.ys().iter().map(|y| (-36.0 * (y - 0.5).powi(2)).exp()).collect();
    separable(&a, &b)
}

/// Solve `D_xx X + X D_yy^T = F` by the 1D eigendecompositions, truncating
/// only at roundoff level.
pub fn fast_poisson_solve(f: &FactoredMatrix, grid: &Grid2D) -> Result<FactoredMatrix> {
    fast_poisson_solve_with(f, grid, None)
}

/// [`fast_poisson_solve`] with an explicit truncation of the result.
pub fn fast_poisson_solve_with(
    f: &FactoredMatrix,
    grid: &Grid2D,
    spec: Option<TruncationSpec>,
) -> Result<FactoredMatrix> {
    check_grid(f, grid)?;
    if grid.is_periodic() {
        return Err(Error::InvalidArgument(
            "fast Poisson solve needs a Dirichlet grid (the periodic Laplacian is singular)".into(),
        ));
    }
    let opx = SpectralOperator1D::dirichlet(grid.m, grid.hx);
    let opy = SpectralOperator1D::dirichlet(grid.n, grid.hy);
    let lx = opx.eigenvalues();
    let ly = opy.eigenvalues();
    let mut uh = opx.forward(f.u());
    for k in 0..f.rank() {
        uh.column_mut(k).scale_mut(f.s()[k]);
    }
    let vh = opy.forward(f.v());
    let mut xh = &uh * vh.transpose();
    for j in 0..grid.n {
        for i in 0..grid.m {
            let d = lx[i] + ly[j];
            if d == 0.0 {
                return Err(Error::InvalidArgument("zero eigenvalue sum in Poisson solve".into()));
            }
            xh[(i, j)] /= -d;
        }
    }
    let spec = spec.unwrap_or_else(|| TruncationSpec::with_eps(1e-14 * xh.norm()));
    let t = truncated_svd_dense(&xh, spec)?;
    FactoredMatrix::from_parts(opx.inverse(t.u()), t.s().clone(), opy.inverse(t.v()))
}

/// Exponential-sum approximate inverse of `-(D_xx (+) D_yy)` on `grid`.
pub fn laplace_preconditioner(grid: &Grid2D, weights: EsWeights) -> Result<EsPreconditioner> {
    if grid.is_periodic() {
        return Err(Error::InvalidArgument("Laplace preconditioner needs a Dirichlet grid".into()));
    }
    let opx = SpectralOperator1D::dirichlet(grid.m, grid.hx);
    let opy = if grid.n == grid.m && grid.hy == grid.hx {
        opx.clone()
    } else {
        SpectralOperator1D::dirichlet(grid.n, grid.hy)
    };
    EsPreconditioner::new(weights, opx, opy)
}

/// `G(X) = X + alpha M (D_xx X + X D_yy^T - F)` with `M = I` or the
/// exponential-sum inverse of `-Delta`.
pub struct LaplaceProblem {
    grid: Grid2D,
    alpha: f64,
    forcing: FactoredMatrix,
    precond: Option<EsPreconditioner>,
}

/// Laplace problem on `grid`; `alpha` defaults to `0.1 min(hx^2, hy^2)`
/// without preconditioner and to 1 with one.
pub fn laplace_problem(grid: Grid2D, alpha: Option<f64>, precond: Option<EsPreconditioner>) -> Result<LaplaceProblem> {
    let alpha = alpha.unwrap_or(if precond.is_some() {
        1.0
    } else {
        0.1 * (grid.hx * grid.hx).min(grid.hy * grid.hy)
    });
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let forcing = laplace_forcing(&grid)?;
    Ok(LaplaceProblem {
        grid,
        alpha,
        forcing,
        precond,
    })
}

impl LaplaceProblem {
    /// The default `[-1, 1]^2` grid with `m = n` interior points.
    pub fn default_grid(m: usize) -> Result<Grid2D> {
        Grid2D::dirichlet(m, m, (-1.0, 1.0), (-1.0, 1.0))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn forcing(&self) -> &FactoredMatrix {
        &self.forcing
    }
    pub fn preconditioner(&self) -> Option<&EsPreconditioner> {
        self.precond.as_ref()
    }

    /// Replace the forcing (same grid).
    pub fn with_forcing(mut self, f: FactoredMatrix) -> Result<Self> {
        check_grid(&f, &self.grid)?;
        self.forcing = f;
        Ok(self)
    }

    /// `D_xx X + X D_yy^T - F` in unrounded factored form.
    pub fn residual_terms(&self, x: &FactoredMatrix) -> Result<FactorSum> {
        let mut sum = laplace_terms(x, &self.grid)?;
        sum.push(-1.0, &self.forcing)?;
        Ok(sum)
    }
}

impl FixedPointProblem for LaplaceProblem {
    fn name(&self) -> &str {
        "laplace"
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn evaluate(&self, x: &FactoredMatrix, ev: &mut Evaluator) -> Result<FactoredMatrix> {
        let residual = self.residual_terms(x)?;
        let mut sum = FactorSum::new(self.grid.m, self.grid.n);
        sum.push(1.0, x)?;
        match &self.precond {
            None => sum.extend_scaled(self.alpha, residual)?,
            Some(pre) => {
                let r = ev.round(&residual)?;
                let mr = pre.apply(&r, ev.spec())?;
                sum.push(self.alpha, &mr)?;
            }
        }
        ev.round(&sum)
    }

    fn initial_iterate(&self, seed: u64) -> Result<FactoredMatrix> {
        let (u, v) = cold_start(self.grid.m, self.grid.n, seed);
        FactoredMatrix::from_parts(u, DVector::from_element(1, 1.0), v)
    }

    /// Linear problem: the combination step is exact rounding. With the
    /// ES preconditioner the run is unscheduled and truncates at a fixed
    /// `0.01 * tol`.
    fn hints(&self) -> SolverHints {
        let tol = 1e-10;
        SolverHints {
            window: 5,
            theta: 0.5,
            tol,
            scheduling: self.precond.is_none(),
            eps_g0: if self.precond.is_some() { 0.01 * tol } else { 1e-2 },
            combination: CombinationMode::Rounding,
        }
    }
}
