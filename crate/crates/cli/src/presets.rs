//! Named experiment presets and the option set shared with the command line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lraa_core::solver::CombinationMode;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Laplace,
    Bratu,
    MongeAmpere,
    AllenCahn,
    CrossApprox,
    Parametric,
}

impl Problem {
    pub const ALL: [Problem; 6] = [
        Problem::Laplace,
        Problem::Bratu,
        Problem::MongeAmpere,
        Problem::AllenCahn,
        Problem::CrossApprox,
        Problem::Parametric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Laplace => "laplace",
            Problem::Bratu => "bratu",
            Problem::MongeAmpere => "monge-ampere",
            Problem::AllenCahn => "allen-cahn",
            Problem::CrossApprox => "cross-approx",
            Problem::Parametric => "parametric",
        }
    }

    pub fn default_grid(self) -> usize {
        match self {
            Problem::Laplace => 31,
            Problem::Bratu => 200,
            Problem::MongeAmpere => 21,
            Problem::AllenCahn => 256,
            Problem::CrossApprox | Problem::Parametric => 0,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::UnknownTarget(s.to_string()))
    }
}

/// Stopping tolerance; `0.01h` means a multiple of the mesh width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    MeshRelative(f64),
}

impl FromStr for Tolerance {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (num, mesh) = match s.strip_suffix('h') {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        let v: f64 = num.parse().map_err(|_| format!("invalid tolerance `{s}`"))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(format!("tolerance must be finite and >= 0, got `{s}`"));
        }
        Ok(if mesh {
            Tolerance::MeshRelative(v)
        } else {
            Tolerance::Absolute(v)
        })
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Absolute(v) => write!(f, "{v:e}"),
            Tolerance::MeshRelative(v) => write!(f, "{v}h"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precond {
    #[default]
    None,
    Es,
}

impl FromStr for Precond {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Precond::None),
            "es" => Ok(Precond::Es),
            _ => Err(format!("unknown preconditioner `{s}` (none, es)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum WeightsSource {
    #[default]
    Generate,
    File(PathBuf),
}

impl FromStr for WeightsSource {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(if s == "generate" {
            WeightsSource::Generate
        } else {
            WeightsSource::File(PathBuf::from(s))
        })
    }
}

pub fn parse_combination(s: &str) -> std::result::Result<CombinationMode, String> {
    match s {
        "cross" => Ok(CombinationMode::CrossDeim),
        "round" => Ok(CombinationMode::Rounding),
        _ => Err(format!("unknown combination mode `{s}` (cross, round)")),
    }
}

pub fn combination_name(mode: CombinationMode) -> &'static str {
    match mode {
        CombinationMode::CrossDeim => "cross",
        CombinationMode::Rounding => "round",
    }
}

/// Everything a single run can be configured with. `None` means the
/// problem's own default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub grid: Option<usize>,
    pub tol: Option<Tolerance>,
    pub theta: Option<f64>,
    pub window: Option<usize>,
    pub precond: Option<Precond>,
    pub es_weights: Option<WeightsSource>,
    pub combination: Option<CombinationMode>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub maxiter: Option<usize>,
    pub eps_g0: Option<f64>,
    pub no_scheduling: bool,
    pub matrix: Option<String>,
    pub steps: Option<usize>,
    pub dense: bool,
}

impl RunOptions {
    /// Names of the set options that a preset fixes itself.
    fn experiment_flags(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut check = |set: bool, name| {
            if set {
                v.push(name);
            }
        };
        check(self.grid.is_some(), "--grid");
        check(self.tol.is_some(), "--tol");
        check(self.theta.is_some(), "--theta");
        check(self.window.is_some(), "--window");
        check(self.precond.is_some(), "--precond");
        check(self.combination.is_some(), "--combination");
        check(self.eps_g0.is_some(), "--eps-g0");
        check(self.no_scheduling, "--no-scheduling");
        check(self.matrix.is_some(), "--matrix");
        check(self.steps.is_some(), "--steps");
        check(self.dense, "--dense");
        v
    }

    /// Overlay the run-wide options (seed, maxiter, weights, reps) of
    /// `user` onto a preset's options.
    fn with_global(mut self, user: &RunOptions) -> Self {
        self.seed = user.seed.or(self.seed);
        self.maxiter = user.maxiter.or(self.maxiter);
        self.es_weights = user.es_weights.clone().or(self.es_weights);
        self.reps = user.reps.or(self.reps);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub id: String,
    pub preset: Option<String>,
    pub problem: Problem,
    pub opts: RunOptions,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub runs: Vec<RunSpec>,
}

fn spec(preset: &str, suffix: &str, problem: Problem, opts: RunOptions) -> RunSpec {
    RunSpec {
        id: format!("{preset}-{suffix}"),
        preset: Some(preset.to_string()),
        problem,
        opts,
    }
}

fn exp_label(e: i32) -> String {
    format!("tol1e-{e}")
}

pub fn presets() -> Vec<Preset> {
    let mut out = Vec::new();

    for (name, matrix, max_exp, description) in [
        ("cross-approx-g1", "G1", 12, "Cross-DEIM on the 100x100 Hilbert matrix, tolerances 1e-1..1e-12"),
        ("cross-approx-g2", "G2", 5, "Cross-DEIM on the 500x500 quintic kink, tolerances 1e-1..1e-5"),
    ] {
        let runs = (1..=max_exp)
            .map(|e| {
                spec(
                    name,
                    &exp_label(e),
                    Problem::CrossApprox,
                    RunOptions {
                        matrix: Some(matrix.into()),
                        tol: Some(Tolerance::Absolute(10f64.powi(-e))),
                        reps: Some(100),
                        ..RunOptions::default()
                    },
                )
            })
            .collect();
        out.push(Preset { name, description, runs });
    }

    for (name, matrix, description) in [
        ("parametric-h1", "H1", "80-step rotating Gaussian, warm versus cold start"),
        ("parametric-h2", "H2", "80-step rotating kink, warm versus cold start"),
    ] {
        out.push(Preset {
            name,
            description,
            runs: vec![spec(
                name,
                "tol1e-2",
                Problem::Parametric,
                RunOptions {
                    matrix: Some(matrix.into()),
                    tol: Some(Tolerance::Absolute(1e-2)),
                    ..RunOptions::default()
                },
            )],
        });
    }

    let laplace = |grid: usize| RunOptions {
        grid: Some(grid),
        tol: Some(Tolerance::Absolute(1e-10)),
        ..RunOptions::default()
    };
    out.push(Preset {
        name: "laplace-theta-sweep",
        description: "Laplace 31x31, scheduling theta in {1, 0.5, 0.2, 0.1}",
        runs: [1.0, 0.5, 0.2, 0.1]
            .into_iter()
            .map(|theta| {
                spec(
                    "laplace-theta-sweep",
                    &format!("theta{theta}"),
                    Problem::Laplace,
                    RunOptions {
                        theta: Some(theta),
                        ..laplace(31)
                    },
                )
            })
            .collect(),
    });
    out.push(Preset {
        name: "laplace-window-sweep",
        description: "Laplace 31x31, window sizes 1, 3, 5, 7, 10, 20",
        runs: [1, 3, 5, 7, 10, 20]
            .into_iter()
            .map(|w| {
                spec(
                    "laplace-window-sweep",
                    &format!("window{w}"),
                    Problem::Laplace,
                    RunOptions {
                        window: Some(w),
                        ..laplace(31)
                    },
                )
            })
            .collect(),
    });
    out.push(Preset {
        name: "laplace-grid-sweep",
        description: "Laplace at 15, 31, 63, 127 with theta 0.5",
        runs: [15, 31, 63, 127]
            .into_iter()
            .map(|m| spec("laplace-grid-sweep", &format!("n{m}"), Problem::Laplace, laplace(m)))
            .collect(),
    });
    out.push(Preset {
        name: "laplace-es",
        description: "ES-preconditioned Laplace at 1023 and 4096 (4096 is slow)",
        runs: [1023, 4096]
            .into_iter()
            .map(|m| {
                spec(
                    "laplace-es",
                    &format!("n{m}"),
                    Problem::Laplace,
                    RunOptions {
                        precond: Some(Precond::Es),
                        ..laplace(m)
                    },
                )
            })
            .collect(),
    });
    out.push(Preset {
        name: "laplace-no-scheduling",
        description: "Laplace 31x31 with truncation fixed at 1e-10",
        runs: vec![spec(
            "laplace-no-scheduling",
            "n31",
            Problem::Laplace,
            RunOptions {
                no_scheduling: true,
                eps_g0: Some(1e-10),
                ..laplace(31)
            },
        )],
    });
    out.push(Preset {
        name: "laplace-dense-aa",
        description: "Laplace 31 and 63, lrAA against dense Anderson acceleration",
        runs: [31, 63]
            .into_iter()
            .map(|m| {
                spec(
                    "laplace-dense-aa",
                    &format!("n{m}"),
                    Problem::Laplace,
                    RunOptions {
                        dense: true,
                        ..laplace(m)
                    },
                )
            })
            .collect(),
    });
    out.push(Preset {
        name: "bratu-precond",
        description: "Bratu 200x200 with and without the ES preconditioner",
        runs: [Precond::None, Precond::Es]
            .into_iter()
            .map(|p| {
                spec(
                    "bratu-precond",
                    if p == Precond::Es { "es" } else { "none" },
                    Problem::Bratu,
                    RunOptions {
                        precond: Some(p),
                        ..RunOptions::default()
                    },
                )
            })
            .collect(),
    });
    let mut ma = Vec::new();
    for m in [21, 61, 101, 221] {
        for (label, tol) in [("tol1e-10", Tolerance::Absolute(1e-10)), ("tol0.01h", Tolerance::MeshRelative(0.01))] {
            ma.push(spec(
                "monge-ampere-table",
                &format!("n{m}-{label}"),
                Problem::MongeAmpere,
                RunOptions {
                    grid: Some(m),
                    tol: Some(tol),
                    ..RunOptions::default()
                },
            ));
        }
    }
    out.push(Preset {
        name: "monge-ampere-table",
        description: "Monge-Ampere at 21, 61, 101, 221 points, tolerances 1e-10 and 0.01h",
        runs: ma,
    });
    out.push(Preset {
        name: "allen-cahn-tol",
        description: "Allen-Cahn 256x256 to t=10 at TOL 1e-2 and 1e-4",
        runs: [(2, 1e-2), (4, 1e-4)]
            .into_iter()
            .map(|(e, tol)| {
                spec(
                    "allen-cahn-tol",
                    &exp_label(e),
                    Problem::AllenCahn,
                    RunOptions {
                        tol: Some(Tolerance::Absolute(tol)),
                        ..RunOptions::default()
                    },
                )
            })
            .collect(),
    });
    out
}

/// Expand a preset name or a problem name into run specifications.
///
/// With a preset only the run-wide options (`--seed`, `--maxiter`,
/// `--es-weights`, `--reps`) may be given.
pub fn resolve(target: &str, user: &RunOptions) -> Result<Vec<RunSpec>> {
    if let Some(p) = presets().into_iter().find(|p| p.name == target) {
        let fixed = user.experiment_flags();
        if !fixed.is_empty() {
            return Err(CliError::InvalidOptions(format!(
                "preset `{target}` fixes its own settings; drop {}",
                fixed.join(", ")
            )));
        }
        return Ok(p
            .runs
            .into_iter()
            .map(|mut r| {
                r.opts = r.opts.with_global(user);
                r
            })
            .collect());
    }
    let problem: Problem = target.parse()?;
    let grid = user.grid.unwrap_or(problem.default_grid());
    let seed = user.seed.unwrap_or(0);
    let id = match problem {
        Problem::CrossApprox | Problem::Parametric => {
            format!("{problem}-{}-s{seed}", user.matrix.as_deref().unwrap_or("default").to_lowercase())
        }
        _ => format!("{problem}-n{grid}-s{seed}"),
    };
    Ok(vec![RunSpec {
        id,
        preset: None,
        problem,
        opts: user.clone(),
    }])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_parsing() {
        assert_eq!("1e-10".parse::<Tolerance>().unwrap(), Tolerance::Absolute(1e-10));
        assert_eq!("0.01h".parse::<Tolerance>().unwrap(), Tolerance::MeshRelative(0.01));
        assert!("abc".parse::<Tolerance>().is_err());
        assert!("-1".parse::<Tolerance>().is_err());
    }

    #[test]
    fn every_preset_expands() {
        let names: Vec<_> = presets().iter().map(|p| p.name).collect();
        for name in &names {
            let runs = resolve(name, &RunOptions::default()).unwrap();
            assert!(!runs.is_empty(), "{name}");
            let mut ids: Vec<_> = runs.iter().map(|r| r.id.clone()).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), runs.len(), "duplicate run ids in {name}");
        }
    }

    #[test]
    fn sweeps_cover_their_grids() {
        let find = |n: &str| presets().into_iter().find(|p| p.name == n).unwrap();
        let thetas: Vec<_> = find("laplace-theta-sweep").runs.iter().map(|r| r.opts.theta.unwrap()).collect();
        assert_eq!(thetas, [1.0, 0.5, 0.2, 0.1]);
        let windows: Vec<_> = find("laplace-window-sweep").runs.iter().map(|r| r.opts.window.unwrap()).collect();
        assert_eq!(windows, [1, 3, 5, 7, 10, 20]);
        assert_eq!(find("monge-ampere-table").runs.len(), 8);
        assert_eq!(find("cross-approx-g1").runs.len(), 12);
        assert_eq!(find("cross-approx-g2").runs.len(), 5);
    }

    #[test]
    fn presets_reject_experiment_flags() {
        let user = RunOptions {
            theta: Some(0.3),
            ..RunOptions::default()
        };
        assert!(matches!(
            resolve("laplace-theta-sweep", &user),
            Err(CliError::InvalidOptions(_))
        ));
        let user = RunOptions {
            seed: Some(9),
            ..RunOptions::default()
        };
        let runs = resolve("laplace-theta-sweep", &user).unwrap();
        assert!(runs.iter().all(|r| r.opts.seed == Some(9)));
    }

    #[test]
    fn unknown_targets_fail() {
        assert!(matches!(
            resolve("heat", &RunOptions::default()),
            Err(CliError::UnknownTarget(_))
        ));
    }
}
