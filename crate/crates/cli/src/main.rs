use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lraa_cli::presets::{parse_combination, Precond, Tolerance, WeightsSource};
use lraa_cli::runner::execute_one;
use lraa_cli::summarize::{load_all, render_table, write_csv};
use lraa_cli::{presets, resolve, OutputDir, Result, RunOptions};
use lraa_core::solver::CombinationMode;

#[derive(Parser)]
#[command(name = "lraa", version, about = "Low-rank Anderson acceleration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a single problem.
    Run(RunArgs),
    /// List the available presets.
    Presets,
    /// Tabulate run summaries.
    Summarize {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Preset name or one of laplace, bratu, monge-ampere, allen-cahn,
    /// cross-approx, parametric.
    target: String,
    #[arg(long)]
    grid: Option<usize>,
    /// Absolute tolerance, or `<c>h` for `c` times the mesh width.
    #[arg(long)]
    tol: Option<Tolerance>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    /// `none` or `es`.
    #[arg(long)]
    precond: Option<Precond>,
    /// ES weights file, or `generate`.
    #[arg(long)]
    es_weights: Option<WeightsSource>,
    /// `cross` or `round`.
    #[arg(long, value_parser = parse_combination)]
    combination: Option<CombinationMode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    maxiter: Option<usize>,
    #[arg(long)]
    eps_g0: Option<f64>,
    #[arg(long)]
    no_scheduling: bool,
    /// Test matrix: G1, G2, H1 or H2.
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    /// Compare against dense Anderson acceleration.
    #[arg(long)]
    dense: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            grid: self.grid,
            tol: self.tol,
            theta: self.theta,
            window: self.window,
            precond: self.precond,
            es_weights: self.es_weights.clone(),
            combination: self.combination,
            seed: self.seed,
            reps: self.reps,
            maxiter: self.maxiter,
            eps_g0: self.eps_g0,
            no_scheduling: self.no_scheduling,
            matrix: self.matrix.clone(),
            steps: self.steps,
            dense: self.dense,
        }
    }
}

fn run(args: &RunArgs) -> Result<bool> {
    let specs = resolve(&args.target, &args.options())?;
    let out = OutputDir::create(&args.out)?;
    let mut all = true;
    for spec in &specs {
        let outcome = execute_one(spec, &out)?;
        let s = &outcome.summary;
        println!(
            "{}: converged={} iterations={} rank={} residual={:.3e} ({:.0} ms) -> {}",
            s.run_id,
            s.converged,
            s.iterations,
            s.final_rank,
            s.final_residual,
            s.wall_ms,
            outcome.summary_path.display()
        );
        all &= s.converged;
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Presets => {
            for p in presets() {
                println!("{:<24} {:>3} runs  {}", p.name, p.runs.len(), p.description);
            }
            Ok(true)
        }
        Command::Summarize { files, csv } => load_all(&files).and_then(|rows| {
            print!("{}", render_table(&rows));
            if let Some(path) = csv {
                write_csv(&rows, &path)?;
            }
            Ok(true)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
