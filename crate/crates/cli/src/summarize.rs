//! Aggregates run summaries into one table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::schema::RunSummary;

/// One line of the aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub preset: String,
    pub run_id: String,
    pub problem: String,
    pub grid: usize,
    pub iterations: usize,
    pub final_rank: usize,
    pub final_residual: f64,
    pub wall_ms: f64,
    pub converged: bool,
}

impl From<&RunSummary> for TableRow {
    fn from(s: &RunSummary) -> Self {
        Self {
            preset: s.preset.clone().unwrap_or_else(|| "-".into()),
            run_id: s.run_id.clone(),
            problem: s.problem.clone(),
            grid: s.grid,
            iterations: s.iterations,
            final_rank: s.final_rank,
            final_residual: s.final_residual,
            wall_ms: s.wall_ms,
            converged: s.converged,
        }
    }
}

/// Load every summary; the first unreadable or mismatched file aborts.
pub fn load_all(paths: &[PathBuf]) -> Result<Vec<TableRow>> {
    paths
        .iter()
        .map(|p| RunSummary::load(p).map(|s| TableRow::from(&s)))
        .collect()
}

const HEADERS: [&str; 9] = [
    "preset",
    "run_id",
    "problem",
    "grid",
    "iterations",
    "final_rank",
    "final_residual",
    "wall_ms",
    "converged",
];

fn cells(r: &TableRow) -> [String; 9] {
    [
        r.preset.clone(),
        r.run_id.clone(),
        r.problem.clone(),
        r.grid.to_string(),
        r.iterations.to_string(),
        r.final_rank.to_string(),
        format!("{:.3e}", r.final_residual),
        format!("{:.1}", r.wall_ms),
        r.converged.to_string(),
    ]
}

/// Column-aligned text table with a header line.
pub fn render_table(rows: &[TableRow]) -> String {
    let body: Vec<[String; 9]> = rows.iter().map(cells).collect();
    let mut widths = HEADERS.map(str::len);
    for line in &body {
        for (w, c) in widths.iter_mut().zip(line) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut emit = |line: &[&str]| {
        let parts: Vec<String> = line.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    emit(&HEADERS);
    for line in &body {
        emit(&line.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn write_csv(rows: &[TableRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Csv(path.to_path_buf(), e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Csv(path.to_path_buf(), e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
