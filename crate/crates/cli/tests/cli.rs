use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lraa_cli::schema::{CrossRow, IterationRow};
use lraa_cli::RunSummary;

fn lraa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lraa")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_summary(dir: &Path, id: &str, grid: usize, iterations: usize, version: u32) -> String {
    let text = format!(
        r#"{{"schema_version":{version},"run_id":"{id}","preset":"monge-ampere-table","problem":"monge-ampere",
"grid":{grid},"seed":0,"config":null,"converged":true,"iterations":{iterations},"final_rank":5,
"final_residual":1e-10,"max_rank":7,"wall_ms":12.5,"metrics":{{}},"csv":"{id}.csv"}}"#
    );
    let path = dir.join(format!("{id}.json"));
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn laplace_run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = lraa(&["run", "laplace", "--grid", "31", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = dir.path().join("laplace-n31-s0.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "schema_version,iter,rho,rank_X,rank_G,eps_G,cd_iters_eval,cd_maxrank_eval,cd_iters_comb,cd_maxrank_comb,wall_ms"
    );
    let rows: Vec<IterationRow> = csv::Reader::from_path(&csv)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows[0].iter, 0);
    assert!(rows.iter().all(|r| r.schema_version == 1));

    let summary = RunSummary::load(&dir.path().join("laplace-n31-s0.json")).unwrap();
    assert!(summary.converged);
    assert_eq!(summary.iterations + 1, rows.len());
    assert!(summary.final_residual <= 1e-10);
    assert_eq!(summary.csv, "laplace-n31-s0.csv");
}

#[test]
fn cross_approx_is_deterministic() {
    let read = |dir: &Path| -> Vec<CrossRow> {
        csv::Reader::from_path(dir.join("cross-approx-g2-s7.csv"))
            .unwrap()
            .deserialize()
            .collect::<Result<_, _>>()
            .unwrap()
    };
    let args = ["run", "cross-approx", "--matrix", "G2", "--grid", "120", "--tol", "1e-4", "--reps", "4", "--seed", "7"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let mut v = args.to_vec();
        v.extend(["--out", d.path().to_str().unwrap()]);
        let o = lraa(&v);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ra, rb) = (read(a.path()), read(b.path()));
    assert_eq!(ra.len(), 4);
    assert_eq!(ra, rb);
    assert_eq!(ra.iter().map(|r| r.seed).collect::<Vec<_>>(), [7, 8, 9, 10]);
}

#[test]
fn summarize_single_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_summary(dir.path(), "ma-21", 21, 127, 1);
    let o = lraa(&["summarize", &f]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("preset"));
    assert!(lines[1].contains("ma-21") && lines[1].contains("127"));
}

#[test]
fn summarize_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<String> = [(21, 127), (61, 389), (101, 700), (221, 1500)]
        .iter()
        .map(|&(g, it)| write_summary(dir.path(), &format!("ma-{g}"), g, it, 1))
        .collect();
    let table = dir.path().join("table.csv");
    let mut args = vec!["summarize"];
    args.extend(files.iter().map(String::as_str));
    args.extend(["--csv", table.to_str().unwrap()]);
    let o = lraa(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 5);
    let header = stdout.lines().next().unwrap();
    let col = header.find("iterations").unwrap();
    assert!(stdout.lines().skip(1).all(|l| l[col..].starts_with(|c: char| c.is_ascii_digit())));
    let csv_text = fs::read_to_string(table).unwrap();
    assert_eq!(csv_text.lines().count(), 5);
    assert!(csv_text.lines().nth(4).unwrap().contains(",221,1500,"));
}

#[test]
fn summarize_rejects_other_schema_versions() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_summary(dir.path(), "a", 21, 10, 1);
    let bad = write_summary(dir.path(), "b", 21, 10, 2);
    let o = lraa(&["summarize", &good, &bad]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("b.json") && msg.contains("schema version 2"), "{msg}");
}

#[test]
fn unknown_target_fails() {
    let o = lraa(&["run", "no-such-preset"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no-such-preset"));
}

#[test]
fn inapplicable_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["run", "laplace-grid-sweep", "--theta", "0.2"],
        vec!["run", "bratu", "--dense"],
        vec!["run", "monge-ampere", "--precond", "es"],
        vec!["run", "laplace", "--tol", "0.01h"],
        vec!["run", "cross-approx", "--window", "3"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", out]);
        let o = lraa(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("invalid options"), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_weights_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("weights.txt");
    let o = lraa(&[
        "run",
        "bratu",
        "--grid",
        "31",
        "--precond",
        "es",
        "--es-weights",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weights.txt"));
}
