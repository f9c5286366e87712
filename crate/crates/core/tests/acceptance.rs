//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use lraa_core::cross::{cold_start, cross_deim, CrossConfig, CrossDiagnostics};
use lraa_core::lowrank::{diff_norm, lstsq_lowrank, round_sum, FactoredMatrix, TruncationSpec};
use lraa_core::oracle::EntryOracle;
use lraa_core::precond::{EsWeights, ACCURACY_SAMPLES};
use lraa_core::problems::*;
use lraa_core::reference::*;
use lraa_core::solver::{lraa_solve, LrAAConfig, SolveReport};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(checks: &[(bool, String)]) -> Self {
        Self {
            pass: checks.iter().all(|(ok, _)| *ok),
            detail: checks
                .iter()
                .map(|(ok, msg)| format!("{}{}", if *ok { "" } else { "!" }, msg))
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

fn random_dense(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

/// Random factored matrix of rank in `1..=max_rank` with a geometric
/// spectrum, built from QR factors of uniform random blocks.
fn random_factored(rng: &mut ChaCha8Rng, m: usize, n: usize, max_rank: usize) -> FactoredMatrix {
    let r = rng.random_range(1..=max_rank);
    let u = random_dense(rng, m, r).qr().q();
    let v = random_dense(rng, n, r).qr().q();
    let scale = rng.random::<f64>() * 10.0 + 0.1;
    let decay = rng.random::<f64>() * 0.8 + 0.1;
    let s = DVector::from_fn(r, |k, _| scale * decay.powi(k as i32));
    FactoredMatrix::from_parts(u, s, v).unwrap()
}

fn dense_lstsq(d: &[DMatrix<f64>], b: &DMatrix<f64>) -> DVector<f64> {
    let a = DMatrix::from_fn(b.len(), d.len(), |i, j| d[j].as_slice()[i]);
    let rhs = DVector::from_column_slice(b.as_slice());
    jacobi_lstsq(&a, &rhs, 1e-14)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 1000;
    let (mut worst_exact, mut worst_trunc, mut rank_misses) = (0.0f64, 0.0f64, 0usize);
    let (mut worst_diff, mut worst_lstsq) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let m = rng.random_range(2..=100);
        let n = rng.random_range(2..=80);
        let cap = m.min(n);
        let count = rng.random_range(1..=4);
        let mats: Vec<FactoredMatrix> = (0..count)
            .map(|_| random_factored(&mut rng, m, n, cap.min(8)))
            .collect();
        let coeffs: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let terms: Vec<(f64, &FactoredMatrix)> = coeffs.iter().copied().zip(mats.iter()).collect();
        let mut dense = DMatrix::zeros(m, n);
        let mut scale = 0.0;
        for (c, x) in &terms {
            dense += densify(x).unwrap() * *c;
            scale += c.abs() * x.frobenius_norm();
        }

        let exact = round_sum(&terms, TruncationSpec::exact()).unwrap();
        worst_exact = worst_exact.max((densify(&exact).unwrap() - &dense).norm() / scale);

        let (_, s, _) = jacobi_svd(&dense);
        let eps = 0.3 * dense.norm() * rng.random::<f64>();
        let trunc = round_sum(&terms, TruncationSpec::new(eps, cap).unwrap()).unwrap();
        let err = (densify(&trunc).unwrap() - &dense).norm();
        if s[0] > 0.0 {
            worst_trunc = worst_trunc.max((err - eps).max(0.0) / scale);
            if trunc.rank() != svd_rank(&s, eps).max(1) {
                rank_misses += 1;
            }
        }

        let a = &mats[0];
        let b = random_factored(&mut rng, m, n, cap.min(6));
        let truth = (densify(a).unwrap() - densify(&b).unwrap()).norm();
        let got = diff_norm(a, &b).unwrap();
        worst_diff = worst_diff.max((got - truth).abs() / truth.max(f64::MIN_POSITIVE));

        let k = rng.random_range(1..=4usize.min(m * n / 2));
        let d: Vec<FactoredMatrix> = (0..k)
            .map(|_| random_factored(&mut rng, m, n, cap.min(5)))
            .collect();
        let rhs = random_factored(&mut rng, m, n, cap.min(5));
        let d_dense: Vec<DMatrix<f64>> = d.iter().map(|x| densify(x).unwrap()).collect();
        let reference = dense_lstsq(&d_dense, &densify(&rhs).unwrap());
        let sol = lstsq_lowrank(&d, &rhs).unwrap();
        let diff = (DVector::from_vec(sol.gamma.clone()) - &reference).norm();
        // Relative to the scale of gamma entering the combination.
        worst_lstsq = worst_lstsq.max(diff / reference.norm().max(1.0));
    }
    Outcome::new(&[
        (worst_exact <= 1e-12, format!("round_sum exact rel {worst_exact:.1e} <= 1e-12")),
        (worst_trunc <= 1e-8, format!("round_sum tail excess {worst_trunc:.1e} <= 1e-8")),
        (rank_misses == 0, format!("round_sum rank mismatches {rank_misses}/{trials}")),
        (worst_diff <= 1e-8, format!("diff_norm rel {worst_diff:.1e} <= 1e-8")),
        (worst_lstsq <= 1e-8, format!("lstsq_lowrank rel {worst_lstsq:.1e} <= 1e-8")),
    ])
}

fn cross_runs(
    g: &dyn EntryOracle,
    dense: &DMatrix<f64>,
    eps: f64,
    reps: u64,
) -> Vec<(f64, usize, CrossDiagnostics)> {
    (0..reps)
        .map(|seed| {
            let (u0, v0) = cold_start(g.nrows(), g.ncols(), seed);
            let cfg = CrossConfig::new(eps, g.nrows(), g.ncols()).with_seed(seed);
            let (x, d) = cross_deim(g, &u0, &v0, &cfg).unwrap();
            ((densify(&x).unwrap() - dense).norm(), x.rank(), d)
        })
        .collect()
}

fn cross_criterion(name: &str, m: usize, max_exp: i32, within: f64, rank_slack: usize, mean_iter: Option<f64>) -> Outcome {
    let g = make_test_oracle(name, m, m, 0.0).unwrap();
    let dense = DMatrix::from_fn(m, m, |i, j| g.entry(i, j).unwrap());
    let s = singular_values(&dense);
    let mut checks = Vec::new();
    for e in 1..=max_exp {
        let eps = 10f64.powi(-e);
        let runs = cross_runs(&g, &dense, eps, 100);
        let ok = runs.iter().filter(|r| r.0 <= eps).count() as f64 / runs.len() as f64;
        let svd = svd_rank(&s, eps).max(1);
        let worst_rank = runs.iter().map(|r| r.1).max().unwrap();
        let iters = runs.iter().map(|r| r.2.iterations as f64).sum::<f64>() / runs.len() as f64;
        let mut pass = ok >= within && worst_rank <= svd + rank_slack;
        let mut msg = format!("1e-{e}: ok {:.0}% rank {worst_rank}/{svd}", 100.0 * ok);
        if let Some(limit) = mean_iter {
            pass &= iters <= limit;
            msg.push_str(&format!(" it {iters:.1}"));
        }
        checks.push((pass, msg));
    }
    Outcome::new(&checks)
}

fn criterion_4() -> Outcome {
    let m = 500;
    let eps = 1e-2;
    let mut checks = Vec::new();
    for name in ["H1", "H2"] {
        let (mut warm_it, mut warm_rank, mut cold_it, mut cold_rank) = (0.0, 0.0, 0.0, 0.0);
        let (mut u, mut v) = cold_start(m, m, 0);
        for step in 1..=80u64 {
            let t = step as f64 / 80.0;
            let g = make_test_oracle(name, m, m, t).unwrap();
            let cfg = CrossConfig::new(eps, m, m).with_seed(step);
            let (x, d) = cross_deim(&g, &u, &v, &cfg).unwrap();
            warm_it += d.iterations as f64;
            warm_rank += d.max_intermediate_rank as f64;
            u = x.u().clone();
            v = x.v().clone();
            let (u0, v0) = cold_start(m, m, step);
            let (_, d) = cross_deim(&g, &u0, &v0, &cfg).unwrap();
            cold_it += d.iterations as f64;
            cold_rank += d.max_intermediate_rank as f64;
        }
        let n = 80.0;
        checks.push((
            warm_it <= cold_it && warm_rank <= cold_rank,
            format!(
                "{name}: iters warm {:.2} cold {:.2}, max rank warm {:.2} cold {:.2}",
                warm_it / n,
                cold_it / n,
                warm_rank / n,
                cold_rank / n
            ),
        ));
    }
    Outcome::new(&checks)
}

fn laplace_run(m: usize) -> (LaplaceProblem, SolveReport, FactoredMatrix) {
    let p = laplace_problem(LaplaceProblem::default_grid(m).unwrap(), None, None).unwrap();
    let mut cfg = LrAAConfig::from_hints(p.hints());
    cfg.maxiter = 20_000;
    let x0 = p.initial_iterate(0).unwrap();
    let (_, rep) = lraa_solve(&p, &x0, &cfg).unwrap();
    (p, rep, x0)
}

fn criterion_5() -> Outcome {
    let mut checks = Vec::new();
    for (m, ratio) in [(31, 0.6), (63, 0.35)] {
        let (p, rep, x0) = laplace_run(m);
        let dense = dense_reference_run(DenseProblem::Laplace { m }, Some(&densify(&x0).unwrap()), 5, 1e-10, 20_000).unwrap();
        let grid = *p.grid();
        let exact = dense_poisson_solve(&dense_laplace_forcing(&grid), &grid);
        let svd = svd_rank(&singular_values(&exact), 1e-10);
        let r = rep.iterations as f64 / dense.report.iterations as f64;
        let mut pass = rep.converged && dense.report.converged && r <= ratio;
        let mut msg = format!(
            "{m}: lrAA {} vs dense {} (ratio {r:.2} <= {ratio})",
            rep.iterations, dense.report.iterations
        );
        if m == 31 {
            pass &= rep.final_rank.abs_diff(svd) <= 2;
            msg.push_str(&format!(", rank {} vs SVD {svd}", rep.final_rank));
        }
        checks.push((pass, msg));
    }
    Outcome::new(&checks)
}

fn criterion_6() -> Outcome {
    let p = laplace_problem(LaplaceProblem::default_grid(31).unwrap(), None, None).unwrap();
    let x0 = p.initial_iterate(0).unwrap();
    let mut fixed = LrAAConfig::from_hints(p.hints());
    fixed.scheduling = false;
    fixed.eps_g0 = 1e-10;
    fixed.maxiter = 20_000;
    let (_, rep_fixed) = lraa_solve(&p, &x0, &fixed).unwrap();
    let early = rep_fixed
        .records
        .iter()
        .filter(|r| r.k < 15)
        .map(|r| r.rank_x.max(r.rank_g))
        .max()
        .unwrap_or(0);
    let (_, rep, _) = laplace_run(31);
    let peak = rep.records.iter().map(|r| r.rank_x.max(r.rank_g)).max().unwrap_or(0);
    Outcome::new(&[
        (
            rep_fixed.converged && early > rep_fixed.final_rank,
            format!("fixed eps: rank {early} before k=15 vs final {}", rep_fixed.final_rank),
        ),
        (
            rep.converged && peak <= rep.final_rank + 5,
            format!("theta 0.5: peak {peak} vs final {}", rep.final_rank),
        ),
    ])
}

fn default_weights() -> EsWeights {
    EsWeights::generate(80, 1e10).unwrap()
}

fn criterion_7() -> Outcome {
    let grid = BratuProblem::default_grid(200).unwrap();
    let pre = laplace_preconditioner(&grid, default_weights()).unwrap();
    let p = bratu_problem(grid, 1.0, None, Some(pre)).unwrap();
    let cfg = LrAAConfig::from_hints(p.hints());
    let (_, rep) = lraa_solve(&p, &p.initial_iterate(0).unwrap(), &cfg).unwrap();
    let per_call: Vec<f64> = rep
        .records
        .iter()
        .map(|r| r.eval.cross_iterations as f64 / r.eval.cross_calls.max(1) as f64)
        .collect();
    let mean = per_call.iter().sum::<f64>() / per_call.len() as f64;
    Outcome::new(&[
        (rep.converged && rep.iterations <= 12, format!("iterations {} <= 12", rep.iterations)),
        ((8..=12).contains(&rep.final_rank), format!("rank {} in [8,12]", rep.final_rank)),
        ((2.0..=4.0).contains(&mean), format!("eval Cross-DEIM iterations {mean:.2} in [2,4]")),
    ])
}

fn criterion_8() -> Outcome {
    let mut checks = Vec::new();
    for (points, iters, rank, loose_rank) in [(21, 109.0, 13usize, 8usize), (61, 287.0, 18, 8)] {
        let grid = MongeAmpereProblem::grid_with_points(points).unwrap();
        for (mode, label) in [(MaTolerance::Fixed(1e-10), "1e-10"), (MaTolerance::MeshRelative(0.01), "0.01h")] {
            let p = monge_ampere_problem(grid, mode).unwrap();
            let mut cfg = LrAAConfig::from_hints(p.hints());
            cfg.maxiter = 5000;
            let (_, rep) = lraa_solve(&p, &p.initial_iterate(0).unwrap(), &cfg).unwrap();
            let it = rep.iterations as f64;
            let (pass, msg) = match mode {
                MaTolerance::Fixed(_) => (
                    rep.converged
                        && (0.75 * iters..=1.25 * iters).contains(&it)
                        && rep.final_rank.abs_diff(rank) <= 3,
                    format!(
                        "{points} {label}: iterations {} in [{:.0},{:.0}], rank {} in {rank}+-3",
                        rep.iterations,
                        0.75 * iters,
                        1.25 * iters,
                        rep.final_rank
                    ),
                ),
                MaTolerance::MeshRelative(_) => (
                    rep.converged && rep.iterations <= 15 && rep.final_rank <= loose_rank,
                    format!(
                        "{points} {label}: iterations {} <= 15, rank {} <= {loose_rank}",
                        rep.iterations, rep.final_rank
                    ),
                ),
            };
            checks.push((pass, msg));
        }
    }
    Outcome::new(&checks)
}

fn criterion_9() -> Outcome {
    let tau = 2.0 * std::f64::consts::PI;
    let grid = Grid2D::periodic(64, 64, (0.0, tau), (0.0, tau)).unwrap();
    let cfg = AllenCahnConfig::default();
    let stepper = allen_cahn_stepper(grid, cfg.clone(), default_weights(), None).unwrap();
    let x0 = densify(stepper.state()).unwrap();
    let report = match stepper.run() {
        Ok(r) => r,
        Err(e) => return Outcome::new(&[(false, format!("run aborted: {e}"))]),
    };
    let worst = report.iterations().into_iter().max().unwrap_or(0);
    let reference = dense_allen_cahn_run(&x0, &grid, cfg.nu, cfg.dt, cfg.steps, 1e-10).unwrap();
    let rel = (densify(&report.final_state).unwrap() - &reference).norm() / reference.norm();
    Outcome::new(&[
        (report.steps.len() == cfg.steps, format!("{} steps", report.steps.len())),
        (worst <= 30, format!("max iterations per step {worst} <= 30")),
        (rel <= 5e-2, format!("relative error vs dense {rel:.2e} <= 5e-2")),
    ])
}

fn criterion_10() -> Outcome {
    let w = default_weights();
    let sup = w.measure(1e10, ACCURACY_SAMPLES);
    let grid = LaplaceProblem::default_grid(1023).unwrap();
    let pre = laplace_preconditioner(&grid, w).unwrap();
    let p = laplace_problem(grid, None, Some(pre)).unwrap();
    let x0 = p.initial_iterate(0).unwrap();
    let mut ev = Evaluator::new(TruncationSpec::new(1e-12, 1023).unwrap(), 0);
    let rho0 = diff_norm(&p.evaluate(&x0, &mut ev).unwrap(), &x0).unwrap();
    let mut cfg = LrAAConfig::from_hints(p.hints());
    cfg.tol = 1e-8 * rho0;
    cfg.eps_g0 = 0.01 * cfg.tol;
    cfg.maxiter = 20;
    let (_, rep) = lraa_solve(&p, &x0, &cfg).unwrap();
    Outcome::new(&[
        (sup <= 1e-6, format!("ES sup relative error {sup:.2e} <= 1e-6")),
        (
            rep.converged && rep.iterations <= 20,
            format!(
                "1023 ES Laplace: reduction {:.1e} in {} iterations",
                rep.final_residual / rho0,
                rep.iterations
            ),
        ),
    ])
}

fn main() -> ExitCode {
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let criteria: Vec<(usize, &str, fn() -> Outcome)> = vec![
        (1, "kernel oracle equivalence", criterion_1),
        (2, "Cross-DEIM on G1", || cross_criterion("G1", 100, 12, 0.99, 2, Some(10.0))),
        (3, "Cross-DEIM on G2", || cross_criterion("G2", 500, 5, 0.95, 3, None)),
        (4, "warm-start benefit on H1/H2", criterion_4),
        (5, "Laplace lrAA versus dense AA", criterion_5),
        (6, "scheduling ablation", criterion_6),
        (7, "Bratu with ES", criterion_7),
        (8, "Monge-Ampere table", criterion_8),
        (9, "Allen-Cahn desk scale", criterion_9),
        (10, "ES quality", criterion_10),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        println!(
            "criterion {id:>2} {}: {name} ({:.1}s) {}",
            if out.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
