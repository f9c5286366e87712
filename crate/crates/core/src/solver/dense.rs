use nalgebra::{DMatrix, DVector};

use super::{anderson, AndersonOptions, AndersonSpace, SolveReport};
use crate::error::Result;
use crate::linalg;
use crate::problems::EvalStats;

/// Full-rank arithmetic over dense matrices for a map `g`.
pub struct DenseSpace<F> {
    g: F,
}

impl<F> DenseSpace<F>
where
    F: FnMut(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    pub fn new(g: F) -> Self {
        Self { g }
    }
}

impl<F> AndersonSpace for DenseSpace<F>
where
    F: FnMut(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    type Item = DMatrix<f64>;

    fn evaluate(&mut self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, EvalStats)> {
        Ok(((self.g)(x)?, EvalStats::default()))
    }

    fn distance(&self, g: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
        Ok((g - x).norm())
    }

    fn difference(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(a - b)
    }

    fn least_squares(&self, d: &[DMatrix<f64>], f: &DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
        if d.is_empty() {
            return Ok((Vec::new(), 1.0));
        }
        let len = f.len();
        let mut a = DMatrix::zeros(len, d.len());
        for (j, dj) in d.iter().enumerate() {
            a.column_mut(j).copy_from_slice(dj.as_slice());
        }
        let b = DVector::from_column_slice(f.as_slice());
        let sol = linalg::lstsq(&a, &b)?;
        Ok((sol.x.iter().copied().collect(), sol.condition))
    }

    fn combine(
        &mut self,
        gs: &[&DMatrix<f64>],
        coeffs: &[f64],
        _warm: &DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, EvalStats)> {
        let mut out = DMatrix::zeros(gs[0].nrows(), gs[0].ncols());
        for (g, &c) in gs.iter().zip(coeffs) {
            out += *g * c;
        }
        Ok((out, EvalStats::default()))
    }

    fn tolerance(&self) -> f64 {
        0.0
    }

    fn set_tolerance(&mut self, _eps: f64) {}

    fn rank(&self, x: &DMatrix<f64>) -> usize {
        x.nrows().min(x.ncols()).max(1)
    }
}

/// Dense Anderson acceleration of `x = g(x)`, the full-rank baseline.
/// Degenerate least-squares problems fall back to the minimum-norm
/// solution.
pub fn dense_aa_solve<F>(
    g: F,
    x0: &DMatrix<f64>,
    window: usize,
    tol: f64,
    maxiter: usize,
) -> Result<(DMatrix<f64>, SolveReport)>
where
    F: FnMut(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let mut space = DenseSpace::new(g);
    anderson(
        &mut space,
        x0,
        &AndersonOptions {
            window,
            tol,
            maxiter,
            theta: None,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_contraction_beats_picard() {
        let x0 = DMatrix::from_element(1, 1, 1.0);
        let (x, rep) = dense_aa_solve(|x| Ok(x * 0.5), &x0, 1, 1e-12, 100).unwrap();
        assert!(rep.converged);
        assert!(x[(0, 0)].abs() < 1e-12);
        // Picard needs about 40 halvings to go below 1e-12.
        assert!(rep.iterations <= 40, "{}", rep.iterations);
    }
}
