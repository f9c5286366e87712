use lraa_core::lowrank::{truncated_svd_dense, FactoredMatrix, TruncationSpec};
use lraa_core::precond::{es_apply, EsWeights, SpectralOperator1D};
use lraa_core::problems::{
    bratu_problem, fast_poisson_solve, laplace_forcing, laplace_problem, ma_exact, monge_ampere_problem,
    BratuProblem, FixedPointProblem, Grid2D, LaplaceProblem, MaTolerance, MongeAmpereProblem,
};
use lraa_core::reference::{
    dense_bratu_residual, dense_laplace_map, dense_monge_ampere_map, dense_poisson_solve, dense_reference_run,
    dense_samples, densify, DenseProblem,
};
use lraa_core::problems::ma_forcing;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn smooth(grid: &Grid2D, seed: u64) -> DMatrix<f64> {
    let a = 0.1 + (seed % 7) as f64 * 0.05;
    let b = 1.0 + (seed % 5) as f64 * 0.3;
    dense_samples(grid, |x, y| a * (b * x).sin() * (y + 0.5).cos() + 0.2 * x * y)
}

fn factor(a: &DMatrix<f64>) -> FactoredMatrix {
    truncated_svd_dense(a, TruncationSpec::with_eps(1e-15 * a.norm())).unwrap()
}

fn oracle_dense<P: FixedPointProblem>(p: &P, x: &FactoredMatrix) -> DMatrix<f64> {
    let g = p.oracle(x).unwrap();
    let cols: Vec<usize> = (0..g.ncols()).collect();
    g.col_block(&cols).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn laplace_map_matches_dense(m in 6usize..24, seed in any::<u64>()) {
        let grid = LaplaceProblem::default_grid(m).unwrap();
        let p = laplace_problem(grid, None, None).unwrap();
        let x = smooth(&grid, seed);
        let f = densify(p.forcing()).unwrap();
        let want = dense_laplace_map(&x, &grid, p.alpha(), &f);
        let got = oracle_dense(&p, &factor(&x));
        prop_assert!((got - &want).norm() <= 1e-11 * want.norm());
    }

    #[test]
    fn bratu_map_matches_dense(m in 6usize..24, seed in any::<u64>()) {
        let grid = BratuProblem::default_grid(m).unwrap();
        let p = bratu_problem(grid, 1.0, None, None).unwrap();
        let x = smooth(&grid, seed);
        let want = &x + dense_bratu_residual(&x, &grid, p.lambda()) * p.alpha();
        let xf = factor(&x);
        let g = p.richardson_oracle(&xf);
        let cols: Vec<usize> = (0..m).collect();
        let got = lraa_core::oracle::EntryOracle::col_block(&g, &cols).unwrap();
        prop_assert!((got - &want).norm() <= 1e-11 * want.norm());
    }

    #[test]
    fn fast_poisson_round_trip(m in 4usize..30, n in 4usize..30, seed in any::<u64>()) {
        let grid = Grid2D::dirichlet(m, n, (-1.0, 1.0), (0.0, 2.0)).unwrap();
        let f = smooth(&grid, seed);
        let x = fast_poisson_solve(&factor(&f), &grid).unwrap();
        let want = dense_poisson_solve(&f, &grid);
        prop_assert!((densify(&x).unwrap() - &want).norm() <= 1e-10 * want.norm());
    }
}

#[test]
fn fast_poisson_inverts_the_laplace_forcing() {
    let grid = LaplaceProblem::default_grid(31).unwrap();
    let f = laplace_forcing(&grid).unwrap();
    let x = fast_poisson_solve(&f, &grid).unwrap();
    let p = laplace_problem(grid, None, None).unwrap();
    let residual = p.residual_terms(&x).unwrap().round(TruncationSpec::exact()).unwrap();
    assert!(residual.frobenius_norm() <= 1e-9 * f.frobenius_norm());
}

#[test]
fn exponential_sum_approximates_the_inverse_laplacian() {
    let weights = EsWeights::generate(40, 1e4).unwrap();
    let grid = LaplaceProblem::default_grid(31).unwrap();
    let opx = SpectralOperator1D::dirichlet(grid.m, grid.hx);
    let opy = SpectralOperator1D::dirichlet(grid.n, grid.hy);
    let r = smooth(&grid, 3);
    let approx = es_apply(&weights, &opx, &opy, &factor(&r), TruncationSpec::with_eps(1e-14 * r.norm())).unwrap();
    let exact = dense_poisson_solve(&r, &grid);
    let rel = (densify(&approx).unwrap() - &exact).norm() / exact.norm();
    assert!(rel <= 2.0 * weights.accuracy() + 1e-12, "relative error {rel:e}, accuracy {:e}", weights.accuracy());
}

#[test]
fn monge_ampere_map_matches_dense() {
    let grid = MongeAmpereProblem::grid_with_interior(15).unwrap();
    let p = monge_ampere_problem(grid, MaTolerance::Fixed(1e-10)).unwrap();
    let x = dense_samples(&grid, |x, y| ma_exact(x, y) + 0.01 * (3.0 * x).sin() * (2.0 * y).sin());
    let f = dense_samples(&grid, ma_forcing);
    let want = dense_monge_ampere_map(&x, &grid, ma_exact, &f);
    let got = oracle_dense(&p, &factor(&x));
    assert!((got - &want).norm() <= 1e-11 * want.norm());
}

#[test]
fn damped_monge_ampere_keeps_the_scheme_fixed_point() {
    let m = 9;
    let run = dense_reference_run(DenseProblem::MongeAmpere { m }, None, 0, 1e-13, 20000).unwrap();
    assert!(run.report.converged);
    let grid = MongeAmpereProblem::grid_with_interior(m).unwrap();
    let p = monge_ampere_problem(grid, MaTolerance::Fixed(1e-10)).unwrap();
    let x = run.solution;
    let gx = oracle_dense(&p, &factor(&x));
    assert!((gx - &x).norm() <= 1e-11 * x.norm());
    let exact = dense_samples(&grid, ma_exact);
    assert!((x - exact).amax() < 1e-1);
}
