use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use srtlab_core::cascade::run_cascade;
use srtlab_core::fixtures::golden_exposure_matrix;
use srtlab_core::BankId;

fn srtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srtlab"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn fixtures_pass_and_report_json() {
    let o = srtlab(&["fixtures"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 4);

    let o = srtlab(&["fixtures", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert!(v.as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn fixture_dump_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = srtlab(&["fixtures", "--dump", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let market: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("example_market.json")).unwrap()).unwrap();
    assert_eq!(market["lenders"].as_array().unwrap().len(), 3);
    let tax = fs::read_to_string(dir.path().join("example_srt_tax.csv")).unwrap();
    assert_eq!(tax.lines().count(), 1 + 9);
}

#[test]
fn run_writes_expected_files_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = srtlab(&[
            "run", "--seed", "42", "--set", "steps=40", "--policy", "all", "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let files = csvs(a.path());
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    for p in ["notax", "tobin", "srt"] {
        assert!(names.contains(&format!("{p}.csv").as_str()));
        assert!(names.contains(&format!("{p}_distributions.csv").as_str()));
        assert!(names.contains(&format!("{p}_probabilities.csv").as_str()));
    }
    assert_eq!(files, csvs(b.path()));

    let series = String::from_utf8(files.iter().find(|(n, _)| n == "srt.csv").unwrap().1.clone()).unwrap();
    assert!(series.starts_with("t,policy,esl,cum_volume,avg_clustering,spectral_radius,esl_conditional\n"));
    assert_eq!(series.lines().count(), 41);
    assert!(!series.contains('\r'));

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config"]["steps"], 40);
    assert!(a.path().join("srt_optimizer.log").exists());
}

#[test]
fn manifest_replay_matches() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("scenario.cfg");
    fs::write(&cfg, "steps = 25\nbanks = 8\nbeliefs = full\n").unwrap();
    let o = srtlab(&["run", "--config", cfg.to_str().unwrap(), "--out", a.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = a.path().join("manifest.json");
    let o = srtlab(&["run", "--manifest", manifest.to_str().unwrap(), "--out", b.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csvs(a.path()), csvs(b.path()));
}

#[test]
fn single_policy_and_network_export() {
    let d = tempfile::tempdir().unwrap();
    let o = srtlab(&[
        "run", "--policy", "tobin", "--set", "steps=10", "--export-network", "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<String> = csvs(d.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "tobin.csv",
            "tobin_distributions.csv",
            "tobin_exposure.csv",
            "tobin_loans.csv",
            "tobin_probabilities.csv"
        ]
    );
}

#[test]
fn environment_overrides_file_and_flags_override_environment() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("s.cfg");
    fs::write(&cfg, "steps = 50\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_srtlab"))
        .args(["run", "--policy", "notax", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(d.path())
        .env("SRTLAB_STEPS", "7")
        .env("SRTLAB_SEED", "3")
        .args(["--seed", "4"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let series = fs::read_to_string(d.path().join("notax.csv")).unwrap();
    assert_eq!(series.lines().count(), 8);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
}

#[test]
fn input_errors_exit_one() {
    let o = srtlab(&["run", "--config", "/definitely/missing.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/definitely/missing.cfg"));

    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.cfg");
    fs::write(&cfg, "steps = 10\nshock_prob = 3\n").unwrap();
    let o = srtlab(&["run", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("shock_prob"));

    fs::write(&cfg, "steps = 10\ncolour = blue\n").unwrap();
    let o = srtlab(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":2"));

    assert_eq!(srtlab(&["run", "--policy", "everything"]).status.code(), Some(1));
    assert_eq!(srtlab(&["nonsense"]).status.code(), Some(1));
    assert_eq!(srtlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn analyze_golden_matrix_matches_cascade() {
    let d = tempfile::tempdir().unwrap();
    let a = golden_exposure_matrix();
    let exposure = d.path().join("a.csv");
    let mut text = String::new();
    for row in a.rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(&exposure, text).unwrap();
    let equity = d.path().join("e.csv");
    fs::write(&equity, "1\n".repeat(11)).unwrap();
    let trace = d.path().join("trace.jsonl");
    let o = srtlab(&[
        "analyze", "--exposure", exposure.to_str().unwrap(), "--equity", equity.to_str().unwrap(),
        "--json", "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let si: Vec<f64> = v["systemic_impact"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let e = vec![1.0; 11];
    for (s, got) in si.iter().enumerate() {
        let state = run_cascade(&a, &e, &[BankId(s)]).unwrap();
        assert_eq!(*got, (state.bankrupt_count() - 1) as f64);
    }
    let esl = v["esl"].as_f64().unwrap();
    assert!((esl - si.iter().sum::<f64>() / 11.0).abs() < 1e-12);
    assert_eq!(v["edges"].as_array().unwrap().len(), 110);
    let lines = fs::read_to_string(&trace).unwrap();
    assert!(lines.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(lines.lines().count() >= 11);
}

#[test]
fn analyze_zero_and_malformed_inputs() {
    let d = tempfile::tempdir().unwrap();
    let zero = d.path().join("zero.csv");
    fs::write(&zero, "0,0,0\n0,0,0\n0,0,0\n").unwrap();
    let equity = d.path().join("e.csv");
    fs::write(&equity, "1,2,3\n").unwrap();
    let o = srtlab(&["analyze", "--exposure", zero.to_str().unwrap(), "--equity", equity.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("esl,0.0000000000000000e0"));

    let skew = d.path().join("skew.csv");
    fs::write(&skew, "0,1,0\n1,0,0\n0,0,0\n").unwrap();
    let o = srtlab(&["analyze", "--exposure", skew.to_str().unwrap(), "--equity", equity.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0, 1)") || stderr(&o).contains("(1, 0)"), "{}", stderr(&o));

    let junk = d.path().join("junk.csv");
    fs::write(&junk, "0,a\n").unwrap();
    let o = srtlab(&["analyze", "--exposure", junk.to_str().unwrap(), "--equity", equity.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let short = d.path().join("short.csv");
    fs::write(&short, "1,2\n").unwrap();
    let o = srtlab(&["analyze", "--exposure", zero.to_str().unwrap(), "--equity", short.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
