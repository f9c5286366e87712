//! Bratu problem `Delta u + lambda e^u = 0` on `[0, 1]^2`, zero boundary.

use super::{Evaluator, FixedPointProblem, Grid2D, Neighborhood, SolverHints, StencilOracle};
use crate::error::{Error, Result};
use crate::lowrank::{FactorSum, FactoredMatrix};
use crate::oracle::EntryOracle;
use crate::precond::EsPreconditioner;

/// `G(X) = X + alpha M G_B(X)` with `G_B(X) = Delta_h X + lambda e^X`.
pub struct BratuProblem {
    grid: Grid2D,
    lambda: f64,
    alpha: f64,
    precond: Option<EsPreconditioner>,
}

/// `alpha` defaults to `0.125 hx^2` without preconditioner and to `0.1`
/// with one.
pub fn bratu_problem(
    grid: Grid2D,
    lambda: f64,
    alpha: Option<f64>,
    precond: Option<EsPreconditioner>,
) -> Result<BratuProblem> {
    if grid.is_periodic() {
        return Err(Error::InvalidArgument("Bratu problem needs a Dirichlet grid".into()));
    }
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    let alpha = alpha.unwrap_or(if precond.is_some() { 0.1 } else { 0.125 * grid.hx * grid.hx });
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    Ok(BratuProblem {
        grid,
        lambda,
        alpha,
        precond,
    })
}

impl BratuProblem {
    /// `[0, 1]^2` with `m = n` interior points.
    pub fn default_grid(m: usize) -> Result<Grid2D> {
        Grid2D::dirichlet(m, m, (0.0, 1.0), (0.0, 1.0))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn g_b(&self, i: usize, j: usize, nb: &Neighborhood) -> Result<f64> {
        let ex = nb.c.exp();
        if !ex.is_finite() {
            return Err(Error::Overflow { row: i, col: j });
        }
        let (hx2, hy2) = (self.grid.hx * self.grid.hx, self.grid.hy * self.grid.hy);
        Ok((nb.n + nb.s - 2.0 * nb.c) / hx2 + (nb.w + nb.e - 2.0 * nb.c) / hy2 + self.lambda * ex)
    }

    /// Entry oracle of `G_B(X)`.
    pub fn g_b_oracle<'a>(&'a self, x: &'a FactoredMatrix) -> impl EntryOracle + 'a {
        StencilOracle::new(x, self.grid, None, move |i, j, nb: &Neighborhood| self.g_b(i, j, nb))
    }

    /// Entry oracle of the unpreconditioned map `X + alpha G_B(X)`.
    pub fn richardson_oracle<'a>(&'a self, x: &'a FactoredMatrix) -> impl EntryOracle + 'a {
        StencilOracle::new(x, self.grid, None, move |i, j, nb: &Neighborhood| {
            Ok(nb.c + self.alpha * self.g_b(i, j, nb)?)
        })
    }
}

impl FixedPointProblem for BratuProblem {
    fn name(&self) -> &str {
        "bratu"
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn evaluate(&self, x: &FactoredMatrix, ev: &mut Evaluator) -> Result<FactoredMatrix> {
        match &self.precond {
            None => ev.compress(&self.richardson_oracle(x), x),
            Some(pre) => {
                let gb = ev.compress(&self.g_b_oracle(x), x)?;
                let mgb = pre.apply(&gb, ev.spec())?;
                let mut sum = FactorSum::new(self.grid.m, self.grid.n);
                sum.push(1.0, x)?;
                sum.push(self.alpha, &mgb)?;
                ev.round(&sum)
            }
        }
    }

    fn oracle<'a>(&'a self, x: &'a FactoredMatrix) -> Result<Box<dyn EntryOracle + 'a>> {
        match &self.precond {
            None => Ok(Box::new(self.richardson_oracle(x))),
            Some(_) => {
                let mut ev = Evaluator::new(
                    crate::lowrank::TruncationSpec::with_eps(1e-13 * x.frobenius_norm().max(1.0)),
                    0,
                );
                Ok(Box::new(self.evaluate(x, &mut ev)?))
            }
        }
    }

    fn initial_iterate(&self, _seed: u64) -> Result<FactoredMatrix> {
        Ok(FactoredMatrix::zeros(self.grid.m, self.grid.n))
    }

    /// With the ES preconditioner the run is unscheduled and truncates at
    /// a fixed `0.01 * tol`.
    fn hints(&self) -> SolverHints {
        let tol = 1e-6;
        SolverHints {
            window: 5,
            theta: 0.9,
            tol,
            scheduling: self.precond.is_none(),
            eps_g0: if self.precond.is_some() { 0.01 * tol } else { 1e-2 },
            ..SolverHints::default()
        }
    }
}
