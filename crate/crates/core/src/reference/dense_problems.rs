//! Dense stencil implementations written directly from the discrete
//! formulas, independent of the factored code paths.

use nalgebra::{DMatrix, SymmetricEigen};

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::problems::Grid2D;
use crate::solver::{dense_aa_solve, SolveReport};

/// Dense 1D second-difference matrix `tridiag(1, -2, 1) / h^2`.
pub fn dense_second_difference(n: usize, h: f64, periodic: bool) -> DenseMatrix {
    let mut d = DMatrix::zeros(n, n);
    let inv = 1.0 / (h * h);
    for i in 0..n {
        d[(i, i)] = -2.0 * inv;
        if i > 0 {
            d[(i, i - 1)] = inv;
        }
        if i + 1 < n {
            d[(i, i + 1)] = inv;
        }
    }
    if periodic && n > 2 {
        d[(0, n - 1)] = inv;
        d[(n - 1, 0)] = inv;
    }
    d
}

/// `Delta_h X` by the explicit 5-point loop with zero or wrapped ghosts.
pub fn dense_laplacian(x: &DenseMatrix, grid: &Grid2D) -> DenseMatrix {
    let (m, n) = x.shape();
    let p = grid.is_periodic();
    let get = |i: isize, j: isize| -> f64 {
        if p {
            x[(i.rem_euclid(m as isize) as usize, j.rem_euclid(n as isize) as usize)]
        } else if i < 0 || j < 0 || i >= m as isize || j >= n as isize {
            0.0
        } else {
            x[(i as usize, j as usize)]
        }
    };
    let (hx2, hy2) = (grid.hx * grid.hx, grid.hy * grid.hy);
    DMatrix::from_fn(m, n, |i, j| {
        let (i, j) = (i as isize, j as isize);
        let c = get(i, j);
        (get(i - 1, j) + get(i + 1, j) - 2.0 * c) / hx2 + (get(i, j - 1) + get(i, j + 1) - 2.0 * c) / hy2
    })
}

/// Samples of a function on the grid points.
pub fn dense_samples(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> DenseMatrix {
    let (xs, ys) = (grid.xs(), grid.ys());
    DMatrix::from_fn(grid.m, grid.n, |i, j| f(xs[i], ys[j]))
}

/// The Laplace forcing sampled pointwise.
pub fn dense_laplace_forcing(grid: &Grid2D) -> DenseMatrix {
    dense_samples(grid, |x, y| -25.0 * (-36.0 * ((x - 0.52).powi(2) + (y - 0.5).powi(2))).exp())
}

/// Unpreconditioned Richardson map `X + alpha (Delta_h X - F)`.
pub fn dense_laplace_map(x: &DenseMatrix, grid: &Grid2D, alpha: f64, f: &DenseMatrix) -> DenseMatrix {
    x + (dense_laplacian(x, grid) - f) * alpha
}

/// Solve `D_x X + X D_y = F` (Dirichlet) by numerically computed
/// eigendecompositions of the dense 1D matrices.
pub fn dense_poisson_solve(f: &DenseMatrix, grid: &Grid2D) -> DenseMatrix {
    let ex = SymmetricEigen::new(dense_second_difference(grid.m, grid.hx, false));
    let ey = SymmetricEigen::new(dense_second_difference(grid.n, grid.hy, false));
    let mut fh = ex.eigenvectors.transpose() * f * &ey.eigenvectors;
    for j in 0..grid.n {
        for i in 0..grid.m {
            fh[(i, j)] /= ex.eigenvalues[i] + ey.eigenvalues[j];
        }
    }
    &ex.eigenvectors * fh * ey.eigenvectors.transpose()
}

/// Bratu residual `Delta_h X + lambda e^X`.
pub fn dense_bratu_residual(x: &DenseMatrix, grid: &Grid2D, lambda: f64) -> DenseMatrix {
    dense_laplacian(x, grid) + x.map(|v| lambda * v.exp())
}

/// Monge-Ampere damped scheme map `X + 0.9 (H(X) - X)` on the interior,
/// with boundary values `g` and forcing samples `f`.
pub fn dense_monge_ampere_map(
    x: &DenseMatrix,
    grid: &Grid2D,
    g: impl Fn(f64, f64) -> f64,
    f: &DenseMatrix,
) -> DenseMatrix {
    let (m, n) = x.shape();
    let mut pad = DMatrix::zeros(m + 2, n + 2);
    for i in 0..m + 2 {
        for j in 0..n + 2 {
            let interior = (1..=m).contains(&i) && (1..=n).contains(&j);
            pad[(i, j)] = if interior {
                x[(i - 1, j - 1)]
            } else {
                g(grid.x(i as isize - 1), grid.y(j as isize - 1))
            };
        }
    }
    let h4 = grid.hx.powi(4);
    DMatrix::from_fn(m, n, |i, j| {
        let (p, q) = (i + 1, j + 1);
        let a1 = 0.5 * (pad[(p + 1, q)] + pad[(p - 1, q)]);
        let a2 = 0.5 * (pad[(p, q + 1)] + pad[(p, q - 1)]);
        let a3 = 0.5 * (pad[(p + 1, q + 1)] + pad[(p - 1, q - 1)]);
        let a4 = 0.5 * (pad[(p + 1, q - 1)] + pad[(p - 1, q + 1)]);
        let rad = ((a1 - a2).powi(2) + 0.25 * (a3 - a4).powi(2) + h4 * f[(i, j)]).max(0.0);
        let h = 0.5 * (a1 + a2) - 0.5 * rad.sqrt();
        x[(i, j)] + 0.9 * (h - x[(i, j)])
    })
}

/// Solver for `(I - c Delta_h) Y = R` on a periodic grid by dense
/// eigendecompositions.
struct ShiftedPeriodicSolver {
    qx: DenseMatrix,
    lx: Vec<f64>,
    qy: DenseMatrix,
    ly: Vec<f64>,
    c: f64,
}

impl ShiftedPeriodicSolver {
    fn new(grid: &Grid2D, c: f64) -> Self {
        let ex = SymmetricEigen::new(dense_second_difference(grid.m, grid.hx, true));
        let ey = SymmetricEigen::new(dense_second_difference(grid.n, grid.hy, true));
        Self {
            qx: ex.eigenvectors,
            lx: ex.eigenvalues.iter().copied().collect(),
            qy: ey.eigenvectors,
            ly: ey.eigenvalues.iter().copied().collect(),
            c,
        }
    }

    fn solve(&self, r: &DenseMatrix) -> DenseMatrix {
        let mut rh = self.qx.transpose() * r * &self.qy;
        for j in 0..rh.ncols() {
            for i in 0..rh.nrows() {
                rh[(i, j)] /= 1.0 - self.c * (self.lx[i] + self.ly[j]);
            }
        }
        &self.qx * rh * self.qy.transpose()
    }
}

/// One backward-Euler step of Allen-Cahn, `X = X_prev + dt (nu Delta X + X - X^3)`,
/// by Newton's method. Each Newton system `J d = -F` with
/// `J = (I - dt nu Delta) + dt diag(3 X^2 - 1)` is solved by conjugate
/// gradients preconditioned with the exact inverse of `I - dt nu Delta`.
pub fn dense_allen_cahn_step(
    x_prev: &DenseMatrix,
    grid: &Grid2D,
    nu: f64,
    dt: f64,
    tol: f64,
) -> Result<(DenseMatrix, usize)> {
    let solver = ShiftedPeriodicSolver::new(grid, dt * nu);
    let residual = |x: &DenseMatrix| -> DenseMatrix {
        x - x_prev - (dense_laplacian(x, grid) * nu + x - x.map(|v| v * v * v)) * dt
    };
    let mut x = x_prev.clone();
    for it in 0..50 {
        let f = residual(&x);
        if f.norm() <= tol {
            return Ok((x, it));
        }
        let w = x.map(|v| dt * (3.0 * v * v - 1.0));
        let apply_j = |d: &DenseMatrix| d - dense_laplacian(d, grid) * (dt * nu) + d.component_mul(&w);
        let b = -&f;
        let mut d = DMatrix::zeros(x.nrows(), x.ncols());
        let mut r = b.clone();
        let mut z = solver.solve(&r);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        let bnorm = b.norm();
        for _ in 0..200 {
            let jp = apply_j(&p);
            let a = rz / p.dot(&jp);
            d += &p * a;
            r -= &jp * a;
            if r.norm() <= 1e-14 * bnorm {
                break;
            }
            z = solver.solve(&r);
            let rz_new = r.dot(&z);
            p = &z + &p * (rz_new / rz);
            rz = rz_new;
        }
        x += d;
    }
    Err(Error::StepNotConverged {
        step: 0,
        iterations: 50,
    })
}

/// Dense backward-Euler trajectory from `x0`, returning the final state.
pub fn dense_allen_cahn_run(
    x0: &DenseMatrix,
    grid: &Grid2D,
    nu: f64,
    dt: f64,
    steps: usize,
    tol: f64,
) -> Result<DenseMatrix> {
    let mut x = x0.clone();
    for step in 0..steps {
        x = dense_allen_cahn_step(&x, grid, nu, dt, tol)
            .map_err(|_| Error::StepNotConverged { step: step + 1, iterations: 50 })?
            .0;
    }
    Ok(x)
}

type DenseMap = Box<dyn Fn(&DenseMatrix) -> DenseMatrix>;

/// Problems known to [`dense_reference_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenseProblem {
    /// Unpreconditioned Richardson for the Laplace problem on `[-1, 1]^2`.
    Laplace { m: usize },
    /// Unpreconditioned Richardson for Bratu on `[0, 1]^2`.
    Bratu { m: usize, lambda: f64 },
    /// Damped Monge-Ampere scheme with `m` interior points on `[0, 1]^2`.
    MongeAmpere { m: usize },
}

#[derive(Debug, Clone)]
pub struct DenseRun {
    pub solution: DenseMatrix,
    pub report: SolveReport,
}

/// Dense Anderson (window >= 1) or Picard (window = 0) iteration of a
/// problem's fixed-point map from `x0` (zero when `None`) to `tol`.
pub fn dense_reference_run(
    problem: DenseProblem,
    x0: Option<&DenseMatrix>,
    window: usize,
    tol: f64,
    maxiter: usize,
) -> Result<DenseRun> {
    let (grid, map): (Grid2D, DenseMap) = match problem {
        DenseProblem::Laplace { m } => {
            let grid = Grid2D::dirichlet(m, m, (-1.0, 1.0), (-1.0, 1.0))?;
            let f = dense_laplace_forcing(&grid);
            let alpha = 0.1 * grid.hx * grid.hx;
            (grid, Box::new(move |x| dense_laplace_map(x, &grid, alpha, &f)))
        }
        DenseProblem::Bratu { m, lambda } => {
            let grid = Grid2D::dirichlet(m, m, (0.0, 1.0), (0.0, 1.0))?;
            let alpha = 0.125 * grid.hx * grid.hx;
            (grid, Box::new(move |x| x + dense_bratu_residual(x, &grid, lambda) * alpha))
        }
        DenseProblem::MongeAmpere { m } => {
            let grid = Grid2D::dirichlet_from_function(m, m, (0.0, 1.0), (0.0, 1.0))?;
            let f = dense_samples(&grid, crate::problems::ma_forcing);
            (grid, Box::new(move |x| dense_monge_ampere_map(x, &grid, crate::problems::ma_exact, &f)))
        }
    };
    let x0 = x0.cloned().unwrap_or_else(|| DMatrix::zeros(grid.m, grid.n));
    if x0.shape() != grid.shape() {
        return Err(Error::ShapeMismatch {
            expected: grid.shape(),
            got: x0.shape(),
        });
    }
    if window == 0 {
        return picard(&map, &x0, tol, maxiter);
    }
    let (solution, report) = dense_aa_solve(|x| Ok(map(x)), &x0, window, tol, maxiter)?;
    Ok(DenseRun { solution, report })
}

fn picard(map: &dyn Fn(&DenseMatrix) -> DenseMatrix, x0: &DenseMatrix, tol: f64, maxiter: usize) -> Result<DenseRun> {
    let mut x = x0.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..maxiter {
        let g = map(&x);
        let rho = (&g - &x).norm();
        residuals.push(rho);
        x = g;
        if !rho.is_finite() {
            return Err(Error::Diverged {
                iteration: residuals.len(),
                value: rho,
            });
        }
        if rho < tol {
            converged = true;
            break;
        }
    }
    let report = SolveReport {
        converged,
        iterations: residuals.len(),
        final_residual: residuals.last().copied().unwrap_or(f64::NAN),
        final_rank: x.nrows().min(x.ncols()),
        records: Vec::new(),
        total_samples: 0,
        total_cross_iterations: 0,
        max_rank: x.nrows().min(x.ncols()),
        wall_ms: 0.0,
    };
    Ok(DenseRun { solution: x, report })
}
