use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use detsubmod::cli::{EstimateReport, SolveReport, BENCH_CSV_HEADER, REPORT_SCHEMA_VERSION};
use detsubmod::verify::CheckLine;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_detsubmod"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn tmp(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_prints_a_report_that_round_trips() {
    let path = fixture("coverage.json");
    let out = run(&["solve", path.to_str().unwrap(), "--with-opt", "--paranoid"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let report: SolveReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.schema_version, REPORT_SCHEMA_VERSION);
    assert_eq!(report.command, "solve");
    assert!(report.lossless);
    let opt = report.opt.as_ref().expect("opt attached");
    assert!(opt.ratio.as_ref().unwrap().approx <= 1.0 + 1e-12);
    assert_eq!(serde_json::to_value(&report).unwrap(), serde_json::from_str::<serde_json::Value>(&text).unwrap());
}

#[test]
fn deterministic_solve_is_byte_identical() {
    let path = fixture("cut.json");
    let a = run(&["solve", path.to_str().unwrap()]);
    let b = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sampled_rounding_depends_only_on_seed() {
    let path = fixture("graphic.json");
    let args = ["solve", path.to_str().unwrap(), "--mode", "sampled-rounding", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report: SolveReport = serde_json::from_slice(&a.stdout).unwrap();
    let sampled = report.sampled.expect("sampled section");
    assert!(sampled.inclusion_sample_independent);
    assert!(report.rounding.is_none());
}

#[test]
fn estimate_writes_to_out_file() {
    let path = fixture("modular_uniform.json");
    let dest = tmp("estimate.json");
    let out = run(&["estimate", path.to_str().unwrap(), "--epsilon", "1", "--out", dest.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let report: EstimateReport = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(report.command, "estimate");
    let back: EstimateReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn schema_error_exits_2() {
    let bad = tmp("bad.json");
    std::fs::write(&bad, r#"{"elements": ["a"], "objective": {"type": "modular", "weights": {"a": 1}}, "matroid": {"type": "uniform"}}"#).unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("matroid"), "{}", stderr(&out));
}

#[test]
fn small_epsilon_is_a_capability_error() {
    let path = fixture("coverage.json");
    let out = run(&["solve", path.to_str().unwrap(), "--epsilon", "1/3"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("81"), "{}", stderr(&out));
}

#[test]
fn epsilon_above_one_is_a_contract_violation() {
    let path = fixture("coverage.json");
    let out = run(&["estimate", path.to_str().unwrap(), "--epsilon", "3/2"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = run(&["solve", tmp("does-not-exist.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_suite_passes_on_fixtures() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = run(&["verify", "--suite", dir.to_str().unwrap(), "--draws", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<CheckLine> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.len() > 100);
    assert!(lines.iter().all(|l| l.pass));
    for name in ["coverage", "cut", "graphic", "modular-uniform", "zero"] {
        assert!(lines.iter().any(|l| l.instance_id == name), "{name}");
    }
}

#[test]
fn bench_with_empty_list_prints_header_only() {
    let out = run(&["bench", "--family", "coverage-uniform", "--n-list", ""]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim_end(), BENCH_CSV_HEADER.join(","));
}

#[test]
fn bench_rows_are_csv() {
    let out = run(&["bench", "--family", "cut-partition", "--n-list", "8", "--trials", "2", "--with-rounding"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut reader = csv::Reader::from_reader(&out.stdout[..]);
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), BENCH_CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let phases: Vec<&str> = rows.iter().map(|r| &r[3]).collect();
    assert!(phases.contains(&"mcg") && phases.contains(&"rounding"));
    let mcg: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[3] == "mcg").collect();
    assert_eq!(mcg.len(), 2);
    assert_eq!(mcg[0][4], mcg[1][4]);
}

#[test]
fn bad_n_list_is_a_schema_error() {
    let out = run(&["bench", "--family", "cut-partition", "--n-list", "8,x"]);
    assert_eq!(code(&out), 2);
}
