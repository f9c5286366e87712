use lraa_core::cross::{cold_start, cross_deim, qdeim, CrossConfig};
use lraa_core::lowrank::{diff_norm, lstsq_lowrank, round_sum, truncated_svd_dense, FactoredMatrix, TruncationSpec};
use lraa_core::oracle::{DenseOracle, FnOracle};
use lraa_core::reference::{densify, jacobi_lstsq, singular_values};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Factored matrix from a seed, rank `r`, singular values spread over `decades`.
fn sample(m: usize, n: usize, r: usize, decades: f64, seed: u64) -> FactoredMatrix {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a = DMatrix::from_fn(m, r, |_, _| next());
    let b = DMatrix::from_fn(n, r, |_, _| next());
    let s = DVector::from_fn(r, |k, _| 10f64.powf(-decades * k as f64 / r.max(1) as f64));
    let prod = &a * DMatrix::from_diagonal(&s) * b.transpose();
    truncated_svd_dense(&prod, TruncationSpec::new(0.0, r).unwrap()).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (8usize..40, 8usize..40, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_sum_matches_dense_sum((m, n, seed) in dims(), c in -3.0f64..3.0) {
        let a = sample(m, n, 4, 6.0, seed);
        let b = sample(m, n, 3, 2.0, seed ^ 1);
        let dense = densify(&a).unwrap() + densify(&b).unwrap() * c;
        let exact = round_sum(&[(1.0, &a), (c, &b)], TruncationSpec::exact()).unwrap();
        prop_assert!((densify(&exact).unwrap() - &dense).norm() <= 1e-12 * (1.0 + dense.norm()));
        prop_assert!(exact.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn truncated_round_sum_meets_tolerance((m, n, seed) in dims(), eps_exp in 1.0f64..8.0) {
        let a = sample(m, n, 6, 8.0, seed);
        let b = sample(m, n, 6, 8.0, seed ^ 2);
        let eps = 10f64.powf(-eps_exp);
        let dense = densify(&a).unwrap() - densify(&b).unwrap();
        let out = round_sum(&[(1.0, &a), (-1.0, &b)], TruncationSpec::with_eps(eps)).unwrap();
        prop_assert!((densify(&out).unwrap() - &dense).norm() <= eps * (1.0 + 1e-8) + 1e-14);
        prop_assert!(out.rank() <= 12);
    }

    #[test]
    fn diff_norm_matches_dense((m, n, seed) in dims()) {
        let a = sample(m, n, 5, 4.0, seed);
        let b = sample(m, n, 2, 1.0, seed ^ 3);
        let want = (densify(&a).unwrap() - densify(&b).unwrap()).norm();
        let got = diff_norm(&a, &b).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want));
        prop_assert!(diff_norm(&a, &a).unwrap() <= 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn lowrank_lstsq_is_optimal((m, n, seed) in dims(), window in 1usize..6) {
        let d: Vec<_> = (0..window).map(|k| sample(m, n, 3, 3.0, seed.wrapping_add(k as u64))).collect();
        let b = sample(m, n, 4, 1.0, seed ^ 4);
        let sol = lstsq_lowrank(&d, &b).unwrap();
        prop_assert_eq!(sol.gamma.len(), window);

        let cols: Vec<DVector<f64>> = d
            .iter()
            .map(|x| DVector::from_column_slice(densify(x).unwrap().as_slice()))
            .collect();
        let a = DMatrix::from_columns(&cols);
        let rhs = DVector::from_column_slice(densify(&b).unwrap().as_slice());
        let best = jacobi_lstsq(&a, &rhs, 1e-12);
        let residual = |g: &DVector<f64>| (&a * g - &rhs).norm();
        let ours = residual(&DVector::from_vec(sol.gamma.clone()));
        prop_assert!(ours <= residual(&best) * (1.0 + 1e-8) + 1e-12);
    }

    #[test]
    fn qdeim_selects_a_nonsingular_submatrix((m, _n, seed) in dims(), l in 1usize..8) {
        let u = sample(m, l, l, 2.0, seed).u().clone();
        let idx = qdeim(&u).unwrap();
        prop_assert_eq!(idx.len(), l);
        let mut sorted = idx.as_slice().to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), l);
        let sub = u.select_rows(idx.as_slice());
        let smin = singular_values(&sub).last().copied().unwrap();
        prop_assert!(smin > 1e-3 / (m as f64).sqrt());
    }

    #[test]
    fn cross_deim_reaches_tolerance((m, n, seed) in dims(), eps_exp in 2.0f64..9.0) {
        let x = sample(m, n, 8, 10.0, seed);
        let dense = densify(&x).unwrap();
        let eps = 10f64.powf(-eps_exp) * dense.norm();
        let (u0, v0) = cold_start(m, n, seed);
        let cfg = CrossConfig::new(eps, m, n).with_seed(seed);
        let (approx, diag) = cross_deim(&DenseOracle(&dense), &u0, &v0, &cfg).unwrap();
        prop_assert!(diag.converged);
        prop_assert!(approx.rank() <= 8);
        prop_assert!((densify(&approx).unwrap() - &dense).norm() <= 10.0 * eps);
    }
}

#[test]
fn cross_deim_on_a_constant_matrix() {
    let g = FnOracle::new(200, 200, |_, _| 3.0);
    let (u0, v0) = cold_start(200, 200, 5);
    let (x, diag) = cross_deim(&g, &u0, &v0, &CrossConfig::new(1e-10, 200, 200)).unwrap();
    assert!(diag.converged);
    assert!(diag.iterations <= 3, "{} iterations", diag.iterations);
    assert_eq!(x.rank(), 1);
    assert!((x.s()[0] - 600.0).abs() < 1e-9);
}

#[test]
fn cross_deim_on_the_zero_matrix() {
    let g = FnOracle::new(30, 50, |_, _| 0.0);
    let (u0, v0) = cold_start(30, 50, 0);
    let (x, diag) = cross_deim(&g, &u0, &v0, &CrossConfig::new(1e-8, 30, 50)).unwrap();
    assert!(diag.converged);
    assert!(x.is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncated_svd_reconstructs_rectangular_smooth_samples(
        m in 3usize..40,
        n in 3usize..40,
        a in 0.05f64..1.0,
        b in 0.5f64..3.0,
    ) {
        let f = DMatrix::from_fn(m, n, |i, j| {
            let (x, y) = (i as f64 / m as f64, j as f64 / n as f64);
            a * (b * x).sin() * (y + 0.5).cos() + 0.2 * x * y
        });
        let t = truncated_svd_dense(&f, TruncationSpec::with_eps(1e-15 * f.norm())).unwrap();
        prop_assert!(t.rank() <= 2);
        prop_assert!((densify(&t).unwrap() - &f).norm() <= 1e-13 * f.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sorted_svd_reconstructs_rank_deficient_squares(n in 3usize..12, seed in any::<u64>()) {
        let x = densify(&sample(n, n, 2, 0.5, seed)).unwrap();
        let svd = lraa_core::linalg::svd_sorted(&x).unwrap();
        let rec = &svd.u * DMatrix::from_diagonal(&svd.s) * svd.v.transpose();
        prop_assert!((rec - &x).norm() <= 1e-13 * x.norm());
        prop_assert!(svd.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rounding_a_redundant_sum_is_exact((m, n, seed) in dims()) {
        let a = sample(m, n, 2, 1.0, seed);
        let out = round_sum(&[(1.0, &a), (2.0, &a), (-0.5, &a)], TruncationSpec::exact()).unwrap();
        let want = densify(&a).unwrap() * 2.5;
        prop_assert!((densify(&out).unwrap() - &want).norm() <= 1e-13 * want.norm());
        prop_assert!(out.rank() <= 2 || out.s()[2] <= 1e-14 * out.s()[0]);
    }
}
