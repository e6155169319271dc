use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paracolour::cli::{parse_report, write_report, Format, ReportValue};
use paracolour::game::parse_violations_csv;
use paracolour::sim::parse_dump;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_paracolour"));
    cmd.env_remove("PARACOLOUR_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a stored file; `PARACOLOUR_BLESS=1` rewrites it.
fn assert_golden(name: &str, bytes: &[u8]) {
    let path = golden(name);
    if std::env::var_os("PARACOLOUR_BLESS").is_some() {
        std::fs::write(&path, bytes).unwrap();
    }
    let expected = std::fs::read(&path).unwrap();
    assert!(expected == bytes, "{name} differs from the golden file");
}

#[test]
fn verify_lemma3_matches_golden() {
    let out = run(&["verify", "lemma3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_golden("verify_lemma3.json", &out.stdout);
}

#[test]
fn verify_fixedpoint_csv_matches_golden() {
    let out = run(&["verify", "fixedpoint", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_golden("verify_fixedpoint.csv", &out.stdout);
}

#[test]
fn fixed_point_serialises_exactly() {
    let out = run(&["verify", "fixedpoint"]);
    let doc = parse_report(&out.stdout, Format::Json).unwrap();
    let y1 = &doc.checks[0].values[0].value;
    let json = serde_json::to_string(y1).unwrap();
    assert_eq!(json, r#"{"a":"3","b":"-1","decimal":"0.35425"}"#);
    assert!(matches!(y1, ReportValue::Exact(_)));
}

#[test]
fn report_goes_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["verify", "lemma3", "--out", "report.json"])
        .env("PARACOLOUR_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let bytes = std::fs::read(dir.path().join("report.json")).unwrap();
    let doc = parse_report(&bytes, Format::Json).unwrap();
    assert!(doc.passed);
    let names: Vec<&str> = doc.checks.iter().map(|c| c.name.as_str()).collect();
    assert!(names.contains(&"final distribution") && names.contains(&"discrepancy certificate"));
    let fin = doc.checks.iter().find(|c| c.name == "final distribution").unwrap();
    let d1 = serde_json::to_value(&fin.values[0].value).unwrap();
    assert_eq!(d1["a"], "18897/16");
    assert_eq!(d1["b"], "-28561/64");
}

#[test]
fn reports_round_trip() {
    for args in [vec!["verify", "lemma3"], vec!["verify", "lemma2", "--samples", "40", "--pairs", "10"], vec!["gadget", "--runs", "2000"]] {
        for format in [Format::Json, Format::Csv] {
            let name = if format == Format::Json { "json" } else { "csv" };
            let mut full = args.clone();
            full.extend(["--format", name]);
            let out = run(&full);
            let doc = parse_report(&out.stdout, format).unwrap();
            assert_eq!(write_report(&doc, format).unwrap(), out.stdout, "{args:?} as {name}");
        }
    }
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--depth", "12", "--runs", "100000", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn timings_are_opt_in() {
    let plain = String::from_utf8(run(&["verify", "fixedpoint"]).stdout).unwrap();
    let timed = String::from_utf8(run(&["verify", "fixedpoint", "--timings"]).stdout).unwrap();
    assert!(!plain.contains("runtime_ms"));
    assert!(timed.contains("runtime_ms"));
}

#[test]
fn exit_codes() {
    let bogus = run(&["verify", "bogus"]);
    assert_eq!(bogus.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bogus.stderr).contains("possible values"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--epsilon", "2"]).status.code(), Some(2));

    let failing = run(&["simulate", "--depth", "3", "--runs", "10", "--tolerance", "0"]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(!parse_report(&failing.stdout, Format::Json).unwrap().passed);

    assert_eq!(run(&["independence", "--ceiling", "2000000"]).status.code(), Some(3));
    assert_eq!(run(&["construct", "--depth", "30"]).status.code(), Some(3));
    assert_eq!(run(&["verify", "fixedpoint", "--out", "/nonexistent/dir/report.json"]).status.code(), Some(3));
}

#[test]
fn independence_subcommand() {
    let out = run(&["independence", "--max-factors", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = parse_report(&out.stdout, Format::Json).unwrap();
    let products = serde_json::to_value(&doc.checks[0].values[1].value).unwrap();
    assert_eq!(products, 7 + 49 + 343 + 2401);
}

#[test]
fn construct_writes_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("region.tsv");
    let out = run(&["construct", "--depth", "7", "--strategy", "fixed:1,2,3", "--dump", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let records = parse_dump(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(records.len() as u64, (0..=7).map(paracolour::words::count_normal).sum::<u64>());
}

#[test]
fn stability_writes_violators() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["stability", "--depth", "5", "--epsilon", "0.3", "--series-depth", "10", "--violations", "viol.csv"])
        .env("PARACOLOUR_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("viol.csv")).unwrap();
    let violators = parse_violations_csv(&text).unwrap();
    assert!(!violators.is_empty());
}
