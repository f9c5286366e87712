//! On-disk formats: per-iteration CSV rows and the run-summary JSON.
//!
//! Every row and every summary carries `schema_version`; readers reject
//! anything other than [`SCHEMA_VERSION`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lraa_core::solver::{IterationRecord, SolveReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One lrAA iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub schema_version: u32,
    pub iter: usize,
    pub rho: f64,
    #[serde(rename = "rank_X")]
    pub rank_x: usize,
    #[serde(rename = "rank_G")]
    pub rank_g: usize,
    #[serde(rename = "eps_G")]
    pub eps_g: f64,
    pub cd_iters_eval: usize,
    pub cd_maxrank_eval: usize,
    pub cd_iters_comb: usize,
    pub cd_maxrank_comb: usize,
    pub wall_ms: f64,
}

impl From<&IterationRecord> for IterationRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            iter: r.k,
            rho: r.rho,
            rank_x: r.rank_x,
            rank_g: r.rank_g,
            eps_g: r.eps_g,
            cd_iters_eval: r.eval.cross_iterations,
            cd_maxrank_eval: r.eval.cross_max_rank,
            cd_iters_comb: r.comb.cross_iterations,
            cd_maxrank_comb: r.comb.cross_max_rank,
            wall_ms: r.wall_ms,
        }
    }
}

pub fn iteration_rows(report: &SolveReport) -> Vec<IterationRow> {
    report.records.iter().map(IterationRow::from).collect()
}

/// One Cross-DEIM repetition on a test matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRow {
    pub schema_version: u32,
    pub rep: usize,
    pub seed: u64,
    pub achieved_error: f64,
    pub final_rank: usize,
    pub iters: usize,
    pub max_intermediate_rank: usize,
}

/// One step of a parametric sequence, warm or cold started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricRow {
    pub schema_version: u32,
    pub step: usize,
    pub t: f64,
    pub start: String,
    pub achieved_error: f64,
    pub final_rank: usize,
    pub iters: usize,
    pub max_intermediate_rank: usize,
}

/// One Allen-Cahn time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub schema_version: u32,
    pub step: usize,
    pub time: f64,
    pub iterations: usize,
    pub final_rank: usize,
    pub final_residual: f64,
    pub wall_ms: f64,
}

/// Solver settings recorded with a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub tol: f64,
    pub theta: f64,
    pub window: usize,
    pub scheduling: bool,
    pub eps_g0: f64,
    pub combination: String,
    pub precond: String,
    pub maxiter: usize,
}

/// Run summary. For multi-repetition runs (cross-approx, parametric)
/// `iterations`, `final_rank` and `final_residual` are the worst values
/// over repetitions; for Allen-Cahn `iterations` is the largest per-step
/// count. Means and other derived numbers go in `metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub run_id: String,
    pub preset: Option<String>,
    pub problem: String,
    pub grid: usize,
    pub seed: u64,
    pub config: Option<ConfigRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub final_rank: usize,
    pub final_residual: f64,
    pub max_rank: usize,
    pub wall_ms: f64,
    pub metrics: BTreeMap<String, f64>,
    pub csv: String,
}

impl RunSummary {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Schema {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(CliError::Schema {
                    path: path.to_path_buf(),
                    msg: format!("schema version {v}, expected {SCHEMA_VERSION}"),
                })
            }
            None => {
                return Err(CliError::Schema {
                    path: path.to_path_buf(),
                    msg: "missing schema_version".into(),
                })
            }
        }
        serde_json::from_value(value).map_err(|e| CliError::Schema {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

/// Writes `<dir>/<id>.csv` and `<dir>/<id>.json`.
pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn csv_name(id: &str) -> String {
        format!("{id}.csv")
    }

    pub fn write_rows<T: Serialize>(&self, id: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.dir.join(Self::csv_name(id));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| CliError::Csv(path.clone(), e))?;
        for row in rows {
            w.serialize(row).map_err(|e| CliError::Csv(path.clone(), e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_summary(&self, summary: &RunSummary) -> Result<PathBuf> {
        let path = self.dir.join(format!("{}.json", summary.run_id));
        let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
