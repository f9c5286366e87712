//! Executes run specifications and writes their CSV and JSON files.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use lraa_core::cross::{cold_start, cross_deim, CrossConfig, CrossDiagnostics};
use lraa_core::linalg::svd_sorted;
use lraa_core::lowrank::FactoredMatrix;
use lraa_core::oracle::EntryOracle;
use lraa_core::precond::EsWeights;
use lraa_core::problems::{
    allen_cahn_stepper, bratu_problem, laplace_preconditioner, laplace_problem, make_test_oracle,
    monge_ampere_problem, AllenCahnConfig, BratuProblem, FixedPointProblem, Grid2D, LaplaceProblem, MaTolerance,
    MongeAmpereProblem, SolverHints, TestMatrix,
};
use lraa_core::reference::{densify, dense_reference_run, svd_rank, DenseMatrix, DenseProblem};
use lraa_core::solver::{lraa_solve, LrAAConfig, SolveReport};
use lraa_core::Error as CoreError;

use crate::error::{CliError, Result};
use crate::presets::{combination_name, Precond, Problem, RunOptions, RunSpec, Tolerance, WeightsSource};
use crate::schema::{
    iteration_rows, ConfigRecord, CrossRow, OutputDir, ParametricRow, RunSummary, StepRow, SCHEMA_VERSION,
};

/// Term count and interval of generated ES weights.
pub const GENERATED_TERMS: usize = 80;
pub const GENERATED_INTERVAL: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub summary_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Run every spec in order. Solver failures inside a run (divergence,
/// non-convergence of a time step) are reported in its summary; invalid
/// options abort.
pub fn execute(specs: &[RunSpec], out: &OutputDir) -> Result<Vec<RunOutcome>> {
    specs.iter().map(|s| execute_one(s, out)).collect()
}

pub fn execute_one(spec: &RunSpec, out: &OutputDir) -> Result<RunOutcome> {
    check_options(spec.problem, &spec.opts)?;
    let started = Instant::now();
    let (mut summary, csv_path) = match spec.problem {
        Problem::Laplace => run_laplace(spec, out)?,
        Problem::Bratu => run_bratu(spec, out)?,
        Problem::MongeAmpere => run_monge_ampere(spec, out)?,
        Problem::AllenCahn => run_allen_cahn(spec, out)?,
        Problem::CrossApprox => run_cross(spec, out)?,
        Problem::Parametric => run_parametric(spec, out)?,
    };
    if summary.wall_ms == 0.0 {
        summary.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    }
    let summary_path = out.write_summary(&summary)?;
    Ok(RunOutcome {
        summary,
        summary_path,
        csv_path,
    })
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::InvalidOptions(msg.into())
}

fn check_options(problem: Problem, o: &RunOptions) -> Result<()> {
    let lraa = matches!(
        problem,
        Problem::Laplace | Problem::Bratu | Problem::MongeAmpere | Problem::AllenCahn
    );
    let mut bad = Vec::new();
    if o.matrix.is_some() && lraa {
        bad.push("--matrix");
    }
    if o.steps.is_some() && !matches!(problem, Problem::AllenCahn | Problem::Parametric) {
        bad.push("--steps");
    }
    if o.dense && problem != Problem::Laplace {
        bad.push("--dense");
    }
    if !lraa {
        for (set, name) in [
            (o.theta.is_some(), "--theta"),
            (o.window.is_some(), "--window"),
            (o.precond.is_some(), "--precond"),
            (o.combination.is_some(), "--combination"),
            (o.eps_g0.is_some(), "--eps-g0"),
            (o.no_scheduling, "--no-scheduling"),
            (o.es_weights.is_some(), "--es-weights"),
        ] {
            if set {
                bad.push(name);
            }
        }
    }
    if o.reps.is_some() && problem != Problem::CrossApprox {
        bad.push("--reps");
    }
    if !bad.is_empty() {
        return Err(invalid(format!("{} not applicable to {problem}", bad.join(", "))));
    }
    if matches!(o.tol, Some(Tolerance::MeshRelative(_))) && problem != Problem::MongeAmpere {
        return Err(invalid("mesh-relative tolerance is only defined for monge-ampere"));
    }
    match (problem, o.precond) {
        (Problem::MongeAmpere, Some(Precond::Es)) => {
            return Err(invalid("monge-ampere has no ES preconditioner"));
        }
        (Problem::AllenCahn, Some(Precond::None)) => {
            return Err(invalid("allen-cahn always uses the ES preconditioner"));
        }
        (Problem::Laplace, Some(Precond::Es)) if o.dense => {
            return Err(invalid("--dense compares against unpreconditioned dense AA"));
        }
        _ => {}
    }
    if let Some(g) = o.grid {
        if g < 3 {
            return Err(invalid(format!("--grid must be at least 3, got {g}")));
        }
    }
    Ok(())
}

pub fn load_weights(src: &WeightsSource) -> Result<EsWeights> {
    match src {
        WeightsSource::Generate => Ok(EsWeights::generate(GENERATED_TERMS, GENERATED_INTERVAL)?),
        WeightsSource::File(path) => {
            if !path.exists() {
                return Err(CliError::MissingWeights(path.clone()));
            }
            Ok(EsWeights::load(path)?)
        }
    }
}

fn weights(o: &RunOptions) -> Result<EsWeights> {
    load_weights(o.es_weights.as_ref().unwrap_or(&WeightsSource::Generate))
}

fn absolute_tol(o: &RunOptions) -> Option<f64> {
    match o.tol {
        Some(Tolerance::Absolute(t)) => Some(t),
        _ => None,
    }
}

/// Problem hints overridden by the command-line options. Unscheduled
/// runs without an explicit `--eps-g0` truncate at `0.01 * tol` when
/// preconditioned and at `tol` otherwise.
fn solver_config(hints: SolverHints, o: &RunOptions, preconditioned: bool) -> Result<LrAAConfig> {
    let mut cfg = LrAAConfig::from_hints(hints);
    if let Some(t) = absolute_tol(o) {
        cfg.tol = t;
    }
    if let Some(t) = o.theta {
        cfg.theta = t;
    }
    if let Some(w) = o.window {
        cfg.window = w;
    }
    if let Some(c) = o.combination {
        cfg.combination = c;
    }
    if let Some(n) = o.maxiter {
        cfg.maxiter = n;
    }
    cfg.rng_seed = o.seed.unwrap_or(0);
    if o.no_scheduling {
        cfg.scheduling = false;
    }
    match o.eps_g0 {
        Some(e) => cfg.eps_g0 = e,
        None if !cfg.scheduling => cfg.eps_g0 = if preconditioned { 0.01 * cfg.tol } else { cfg.tol },
        None => {}
    }
    cfg.eps_f = cfg.eps_f.min(cfg.eps_g0);
    cfg.validate()?;
    Ok(cfg)
}

fn config_record(cfg: &LrAAConfig, precond: Precond) -> ConfigRecord {
    ConfigRecord {
        tol: cfg.tol,
        theta: cfg.theta,
        window: cfg.window,
        scheduling: cfg.scheduling,
        eps_g0: cfg.eps_g0,
        combination: combination_name(cfg.combination).into(),
        precond: match precond {
            Precond::None => "none".into(),
            Precond::Es => "es".into(),
        },
        maxiter: cfg.maxiter,
    }
}

fn summary_from_report(spec: &RunSpec, grid: usize, cfg: &LrAAConfig, precond: Precond, rep: &SolveReport) -> RunSummary {
    RunSummary {
        schema_version: SCHEMA_VERSION,
        run_id: spec.id.clone(),
        preset: spec.preset.clone(),
        problem: spec.problem.name().into(),
        grid,
        seed: cfg.rng_seed,
        config: Some(config_record(cfg, precond)),
        converged: rep.converged,
        iterations: rep.iterations,
        final_rank: rep.final_rank,
        final_residual: rep.final_residual,
        max_rank: rep.max_rank,
        wall_ms: rep.wall_ms,
        metrics: BTreeMap::new(),
        csv: OutputDir::csv_name(&spec.id),
    }
}

/// Summary of a run that stopped with a solver error.
fn failed_summary(spec: &RunSpec, grid: usize, cfg: Option<&LrAAConfig>, precond: Precond, err: &CoreError) -> RunSummary {
    let mut metrics = BTreeMap::new();
    if let CoreError::Overflow { row, col } = err {
        metrics.insert("overflow_row".into(), *row as f64);
        metrics.insert("overflow_col".into(), *col as f64);
    }
    RunSummary {
        schema_version: SCHEMA_VERSION,
        run_id: spec.id.clone(),
        preset: spec.preset.clone(),
        problem: spec.problem.name().into(),
        grid,
        seed: spec.opts.seed.unwrap_or(0),
        config: cfg.map(|c| config_record(c, precond)),
        converged: false,
        iterations: 0,
        final_rank: 0,
        final_residual: f64::NAN,
        max_rank: 0,
        wall_ms: 0.0,
        metrics,
        csv: OutputDir::csv_name(&spec.id),
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// A finished solve, or the summary of a run that stopped with an error.
type Solved = std::result::Result<(FactoredMatrix, SolveReport), RunSummary>;

/// Solve, then write the per-iteration CSV. A solver error ends the run
/// with an empty CSV and an unconverged summary.
fn solve_and_write<P: FixedPointProblem>(
    spec: &RunSpec,
    out: &OutputDir,
    problem: &P,
    cfg: &LrAAConfig,
    precond: Precond,
    grid: usize,
) -> Result<(Solved, PathBuf)> {
    let x0 = problem.initial_iterate(cfg.rng_seed)?;
    match lraa_solve(problem, &x0, cfg) {
        Ok((x, rep)) => {
            let csv = out.write_rows(&spec.id, &iteration_rows(&rep))?;
            Ok((Ok((x, rep)), csv))
        }
        Err(err) => {
            let csv = out.write_rows::<crate::schema::IterationRow>(&spec.id, &[])?;
            Ok((Err(failed_summary(spec, grid, Some(cfg), precond, &err)), csv))
        }
    }
}

fn run_laplace(spec: &RunSpec, out: &OutputDir) -> Result<(RunSummary, PathBuf)> {
    let o = &spec.opts;
    let m = o.grid.unwrap_or(Problem::Laplace.default_grid());
    let precond = o.precond.unwrap_or_default();
    let grid = LaplaceProblem::default_grid(m)?;
    let pre = match precond {
        Precond::Es => Some(laplace_preconditioner(&grid, weights(o)?)?),
        Precond::None => None,
    };
    let p = laplace_problem(grid, None, pre)?;
    let cfg = solver_config(p.hints(), o, precond == Precond::Es)?;
    let (result, csv) = solve_and_write(spec, out, &p, &cfg, precond, m)?;
    let (_, rep) = match result {
        Ok(v) => v,
        Err(s) => return Ok((s, csv)),
    };
    let mut summary = summary_from_report(spec, m, &cfg, precond, &rep);
    summary.metrics.insert("alpha".into(), p.alpha());
    if o.dense {
        let x0 = densify(&p.initial_iterate(cfg.rng_seed)?)?;
        let dense = dense_reference_run(DenseProblem::Laplace { m }, Some(&x0), cfg.window, cfg.tol, cfg.maxiter)?;
        let s = sorted_singular_values(&dense.solution)?;
        summary.metrics.insert("dense_iterations".into(), dense.report.iterations as f64);
        summary.metrics.insert(
            "iteration_ratio".into(),
            rep.iterations as f64 / dense.report.iterations.max(1) as f64,
        );
        summary.metrics.insert("dense_svd_rank".into(), svd_rank(&s, cfg.tol) as f64);
        summary.converged &= dense.report.converged;
    }
    Ok((summary, csv))
}

fn run_bratu(spec: &RunSpec, out: &OutputDir) -> Result<(RunSummary, PathBuf)> {
    let o = &spec.opts;
    let m = o.grid.unwrap_or(Problem::Bratu.default_grid());
    let precond = o.precond.unwrap_or_default();
    let grid = BratuProblem::default_grid(m)?;
    let pre = match precond {
        Precond::Es => Some(laplace_preconditioner(&grid, weights(o)?)?),
        Precond::None => None,
    };
    let p = bratu_problem(grid, 1.0, None, pre)?;
    let cfg = solver_config(p.hints(), o, precond == Precond::Es)?;
    let (result, csv) = solve_and_write(spec, out, &p, &cfg, precond, m)?;
    let (_, rep) = match result {
        Ok(v) => v,
        Err(s) => return Ok((s, csv)),
    };
    let mut summary = summary_from_report(spec, m, &cfg, precond, &rep);
    let per_call = |calls: usize, iters: usize| iters as f64 / calls as f64;
    summary.metrics.insert(
        "mean_cd_iters_eval".into(),
        mean(
            rep.records
                .iter()
                .filter(|r| r.eval.cross_calls > 0)
                .map(|r| per_call(r.eval.cross_calls, r.eval.cross_iterations)),
        ),
    );
    summary.metrics.insert(
        "mean_cd_iters_comb".into(),
        mean(
            rep.records
                .iter()
                .filter(|r| r.comb.cross_calls > 0)
                .map(|r| per_call(r.comb.cross_calls, r.comb.cross_iterations)),
        ),
    );
    Ok((summary, csv))
}

fn run_monge_ampere(spec: &RunSpec, out: &OutputDir) -> Result<(RunSummary, PathBuf)> {
    let o = &spec.opts;
    let points = o.grid.unwrap_or(Problem::MongeAmpere.default_grid());
    let mode = match o.tol {
        None => MaTolerance::Fixed(1e-10),
        Some(Tolerance::Absolute(t)) => MaTolerance::Fixed(t),
        Some(Tolerance::MeshRelative(c)) => MaTolerance::MeshRelative(c),
    };
    let grid = MongeAmpereProblem::grid_with_points(points)?;
    let p = monge_ampere_problem(grid, mode)?;
    let mut hints = p.hints();
    hints.tol = p.tol();
    let mut opts = o.clone();
    opts.tol = None;
    let cfg = solver_config(hints, &opts, false)?;
    let (result, csv) = solve_and_write(spec, out, &p, &cfg, Precond::None, points)?;
    let (x, rep) = match result {
        Ok(v) => v,
        Err(s) => return Ok((s, csv)),
    };
    let mut summary = summary_from_report(spec, points, &cfg, Precond::None, &rep);
    let err = (densify(&x)? - p.exact_samples()).amax();
    summary.metrics.insert("max_error".into(), err);
    summary.metrics.insert("h".into(), grid.hx);
    summary.metrics.insert(
        "clamped".into(),
        rep.records.iter().map(|r| r.eval.clamped + r.comb.clamped).sum::<usize>() as f64,
    );
    Ok((summary, csv))
}

fn run_allen_cahn(spec: &RunSpec, out: &OutputDir) -> Result<(RunSummary, PathBuf)> {
    let o = &spec.opts;
    let m = o.grid.unwrap_or(Problem::AllenCahn.default_grid());
    let tau = 2.0 * std::f64::consts::PI;
    let grid = Grid2D::periodic(m, m, (0.0, tau), (0.0, tau))?;
    let mut cfg = AllenCahnConfig::default();
    let hints = SolverHints {
        window: cfg.solver.window,
        theta: cfg.solver.theta,
        tol: cfg.solver.tol,
        scheduling: cfg.solver.scheduling,
        eps_g0: cfg.solver.eps_g0,
        combination: cfg.solver.combination,
    };
    cfg.solver = solver_config(hints, o, true)?;
    if let Some(s) = o.steps {
        cfg.steps = s;
    }
    let solver = cfg.solver;
    let mut stepper = allen_cahn_stepper(grid, cfg.clone(), weights(o)?, None)?;
    let mut rows = Vec::with_capacity(cfg.steps);
    let mut metrics = BTreeMap::new();
    let mut converged = true;
    let mut last: Option<SolveReport> = None;
    let started = Instant::now();
    for _ in 0..cfg.steps {
        match stepper.step() {
            Ok(rep) => {
                rows.push(StepRow {
                    schema_version: SCHEMA_VERSION,
                    step: rows.len() + 1,
                    time: stepper.time(),
                    iterations: rep.iterations,
                    final_rank: rep.final_rank,
                    final_residual: rep.final_residual,
                    wall_ms: rep.wall_ms,
                });
                last = Some(rep);
            }
            Err(CoreError::StepNotConverged { step, iterations }) => {
                converged = false;
                metrics.insert("failed_step".into(), step as f64);
                metrics.insert("failed_step_iterations".into(), iterations as f64);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let csv = out.write_rows(&spec.id, &rows)?;
    metrics.insert("steps".into(), rows.len() as f64);
    metrics.insert("total_iterations".into(), rows.iter().map(|r| r.iterations).sum::<usize>() as f64);
    metrics.insert("final_time".into(), stepper.time());
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        run_id: spec.id.clone(),
        preset: spec.preset.clone(),
        problem: spec.problem.name().into(),
        grid: m,
        seed: solver.rng_seed,
        config: Some(config_record(&solver, Precond::Es)),
        converged,
        iterations: rows.iter().map(|r| r.iterations).max().unwrap_or(0),
        final_rank: stepper.state().rank(),
        final_residual: last.as_ref().map_or(f64::NAN, |r| r.final_residual),
        max_rank: rows.iter().map(|r| r.final_rank).max().unwrap_or(0),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        metrics,
        csv: OutputDir::csv_name(&spec.id),
    };
    Ok((summary, csv))
}

fn dense_of(g: &dyn EntryOracle) -> Result<DenseMatrix> {
    let cols: Vec<usize> = (0..g.ncols()).collect();
    Ok(g.col_block(&cols)?)
}

fn sorted_singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(svd_sorted(a)?.s.iter().copied().collect())
}

fn test_matrix(o: &RunOptions, fallback: TestMatrix) -> Result<(TestMatrix, String)> {
    let name = o.matrix.clone().unwrap_or_else(|| format!("{fallback:?}"));
    let kind: TestMatrix = name.parse()?;
    Ok((kind, name))
}

fn cross_config(o: &RunOptions, eps: f64, m: usize, n: usize, seed: u64) -> CrossConfig {
    let mut cfg = CrossConfig::new(eps, m, n).with_seed(seed);
    if let Some(k) = o.maxiter {
        cfg.maxiter = k;
    }
    cfg
}

fn run_cross(spec: &RunSpec, out: &OutputDir) -> Result<(RunSummary, PathBuf)> {
    let o = &spec.opts;
    let (kind, name) = test_matrix(o, TestMatrix::G1)?;
    if kind.is_parametric() {
        return Err(invalid(format!("{name} is parametric; use the parametric problem")));
    }
    let m = o.grid.unwrap_or(kind.default_size());
    let eps = absolute_tol(o).unwrap_or(1e-6);
    let reps = o.reps.unwrap_or(100);
    let base = o.seed.unwrap_or(0);
    let g = make_test_oracle(&name, m, m, 0.0)?;
    let dense = dense_of(&g)?;
    let svd = svd_rank(&sorted_singular_values(&dense)?, eps).max(1);
    let started = Instant::now();
    let mut rows = Vec::with_capacity(reps);
    let mut diags: Vec<CrossDiagnostics> = Vec::with_capacity(reps);
    for rep in 0..reps {
        let seed = base + rep as u64;
        let (u0, v0) = cold_start(m, m, seed);
        let (x, d) = cross_deim(&g, &u0, &v0, &cross_config(o, eps, m, m, seed))?;
        rows.push(CrossRow {
            schema_version: SCHEMA_VERSION,
            rep,
            seed,
            achieved_error: (densify(&x)? - &dense).norm(),
            final_rank: x.rank(),
            iters: d.iterations,
            max_intermediate_rank: d.max_intermediate_rank,
        });
        diags.push(d);
    }
    let csv = out.write_rows(&spec.id, &rows)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("tol".into(), eps);
    metrics.insert("svd_rank".into(), svd as f64);
    metrics.insert("mean_iters".into(), mean(rows.iter().map(|r| r.iters as f64)));
    metrics.insert("mean_rank".into(), mean(rows.iter().map(|r| r.final_rank as f64)));
    metrics.insert(
        "mean_max_intermediate_rank".into(),
        mean(rows.iter().map(|r| r.max_intermediate_rank as f64)),
    );
    metrics.insert(
        "fraction_within_tol".into(),
        rows.iter().filter(|r| r.achieved_error <= eps).count() as f64 / reps.max(1) as f64,
    );
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        run_id: spec.id.clone(),
        preset: spec.preset.clone(),
        problem: format!("{}-{name}", spec.problem.name()),
        grid: m,
        seed: base,
        config: None,
        converged: diags.iter().all(|d| d.converged),
        iterations: rows.iter().map(|r| r.iters).max().unwrap_or(0),
        final_rank: rows.iter().map(|r| r.final_rank).max().unwrap_or(0),
        final_residual: rows.iter().map(|r| r.achieved_error).fold(0.0, f64::max),
        max_rank: rows.iter().map(|r| r.max_intermediate_rank).max().unwrap_or(0),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        metrics,
        csv: OutputDir::csv_name(&spec.id),
    };
    Ok((summary, csv))
}

fn run_parametric(spec: &RunSpec, out: &OutputDir) -> Result<(RunSummary, PathBuf)> {
    let o = &spec.opts;
    let (kind, name) = test_matrix(o, TestMatrix::H1)?;
    if !kind.is_parametric() {
        return Err(invalid(format!("{name} is not parametric; use cross-approx")));
    }
    let m = o.grid.unwrap_or(kind.default_size());
    let eps = absolute_tol(o).unwrap_or(1e-2);
    let steps = o.steps.unwrap_or(80);
    let base = o.seed.unwrap_or(0);
    let started = Instant::now();
    let mut rows = Vec::with_capacity(2 * steps);
    let mut converged = true;
    let (mut u, mut v) = cold_start(m, m, base);
    for step in 1..=steps {
        let t = step as f64 / steps as f64;
        let g = make_test_oracle(&name, m, m, t)?;
        let dense = dense_of(&g)?;
        let seed = base + step as u64;
        let cfg = cross_config(o, eps, m, m, seed);
        let (cu, cv) = cold_start(m, m, seed);
        let mut sample = |start: &str, u0: &DenseMatrix, v0: &DenseMatrix| -> Result<FactoredMatrix> {
            let (x, d) = cross_deim(&g, u0, v0, &cfg)?;
            converged &= d.converged;
            rows.push(ParametricRow {
                schema_version: SCHEMA_VERSION,
                step,
                t,
                start: start.into(),
                achieved_error: (densify(&x)? - &dense).norm(),
                final_rank: x.rank(),
                iters: d.iterations,
                max_intermediate_rank: d.max_intermediate_rank,
            });
            Ok(x)
        };
        let warm = sample("warm", &u, &v)?;
        sample("cold", &cu, &cv)?;
        u = warm.u().clone();
        v = warm.v().clone();
    }
    let csv = out.write_rows(&spec.id, &rows)?;
    let of = |start: &'static str| rows.iter().filter(move |r| r.start == start);
    let mut metrics = BTreeMap::new();
    metrics.insert("tol".into(), eps);
    for start in ["warm", "cold"] {
        metrics.insert(format!("mean_iters_{start}"), mean(of(start).map(|r| r.iters as f64)));
        metrics.insert(
            format!("mean_max_rank_{start}"),
            mean(of(start).map(|r| r.max_intermediate_rank as f64)),
        );
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        run_id: spec.id.clone(),
        preset: spec.preset.clone(),
        problem: format!("{}-{name}", spec.problem.name()),
        grid: m,
        seed: base,
        config: None,
        converged,
        iterations: of("warm").map(|r| r.iters).max().unwrap_or(0),
        final_rank: of("warm").map(|r| r.final_rank).max().unwrap_or(0),
        final_residual: of("warm").map(|r| r.achieved_error).fold(0.0, f64::max),
        max_rank: of("warm").map(|r| r.max_intermediate_rank).max().unwrap_or(0),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        metrics,
        csv: OutputDir::csv_name(&spec.id),
    };
    Ok((summary, csv))
}
