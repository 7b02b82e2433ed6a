use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn opspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opspace")).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = opspace(args);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn norm_of_m2_identity_is_exactly_one() {
    let (code, v) = run(&["norm", p(&fixture("m2.json")), p(&fixture("m2_identity.json")), "--level", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["lo"], 1.0);
    assert_eq!(v["hi"], 1.0);
    assert_eq!(v["status"], "exact");
    assert_eq!(v["provenance"]["level"], 1);
}

#[test]
fn norm_of_t2_identity_is_trace_norm() {
    let (code, v) = run(&["norm", p(&fixture("t2.json")), p(&fixture("t2_identity.json"))]);
    assert_eq!(code, 0);
    assert!((v["lo"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((v["hi"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\": \"concrete\", ").unwrap();
    let out = opspace(&["norm", p(&bad), p(&fixture("m2_identity.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}

#[test]
fn shape_mismatch_exits_3() {
    let out = opspace(&["norm", p(&fixture("diag2.json")), p(&fixture("m2_identity.json"))]);
    assert_eq!(out.status.code(), Some(3));
    let out = opspace(&["norm", p(&fixture("m2.json")), p(&fixture("swap_grid.json")), "--level", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_seed_in_config_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tolerances": {"exactness": 1e-10, "report": 1e-8, "verdict": 1e-6}}"#).unwrap();
    let out = opspace(&["--config", p(&cfg), "verify", "ruan"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_ruan_passes() {
    let (code, v) = run(&["--config", p(&fixture("config.json")), "verify", "ruan"]);
    assert_eq!(code, 0);
    assert_eq!(v["summary"]["fail"], 0);
    assert_eq!(v["seed"], 7);
}

#[test]
fn verify_tensor_unitor_gap_within_five_percent() {
    let (code, v) = run(&["--config", p(&fixture("config.json")), "verify", "tensor"]);
    assert_eq!(code, 0);
    let gap = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "unitor gap").unwrap();
    assert_eq!(gap["status"], "pass");
    assert!(gap["residual"].as_f64().unwrap() <= 0.05);
}

#[test]
fn every_suite_passes_on_bundled_inputs() {
    for s in ["product", "coproduct", "equaliser", "coequaliser", "quotient", "trace-lemma", "colimit", "coalgebra"] {
        let (code, v) = run(&["--config", p(&fixture("config.json")), "verify", s]);
        assert_eq!(code, 0, "{s}: {v}");
        assert!(v["summary"]["pass"].as_u64().unwrap() > 0);
    }
}

#[test]
fn truncation_chain_norm_is_one() {
    let (code, v) = run(&["verify", "colimit", p(&fixture("truncation_chain.json"))]);
    assert_eq!(code, 0);
    let ordered = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "norm interval is ordered").unwrap();
    assert_eq!(ordered["detail"]["hi"], 1.0);
}

#[test]
fn corrupted_coalgebra_fails_with_unit_counit_residual() {
    let (code, v) = run(&["verify", "coalgebra", p(&fixture("coalgebra_doubled.json"))]);
    assert_eq!(code, 1);
    let checks = v["checks"].as_array().unwrap();
    let left = checks.iter().find(|c| c["name"] == "left counitality").unwrap();
    assert_eq!(left["status"], "fail");
    assert_eq!(left["residual"], 1.0);
}

#[test]
fn grouplike_counit_is_not_contractive() {
    let (code, v) = run(&["verify", "coalgebra", p(&fixture("coalgebra_grouplike.json"))]);
    assert_eq!(code, 1);
    let counit = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "counit is a complete contraction").unwrap();
    assert_eq!(counit["status"], "fail");
    assert_eq!(v["max_residual"], 0.0);
}

#[test]
fn unknown_suite_exits_4() {
    assert_eq!(opspace(&["verify", "monad"]).status.code(), Some(4));
}

#[test]
fn wrong_input_count_is_a_shape_error() {
    let out = opspace(&["verify", "quotient", p(&fixture("diag2.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = fixture("config.json");
    let cfg = p(&cfg_path);
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("run{i}.json"));
            let st = opspace(&["--config", cfg, "--out", p(&path), "verify", "product"]);
            assert_eq!(st.status.code(), Some(0));
            assert!(st.stdout.is_empty());
            std::fs::read(&path).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let other = opspace(&["--config", cfg, "--seed", "8", "verify", "product"]).stdout;
    assert_ne!(other, outs[0]);
}

fn write_run(dir: &Path, name: &str, args: &[&str]) {
    let out = dir.join(name);
    let mut full = vec!["--out", p(&out)];
    full.extend_from_slice(args);
    opspace(&full);
    assert!(out.exists());
}

#[test]
fn report_of_one_passing_run() {
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), "a.json", &["verify", "ruan"]);
    let out = opspace(&["report", p(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["suites"].as_object().unwrap().len(), 1);
    assert_eq!(v["failures"], 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 suite(s), 0 failure(s)"));
}

#[test]
fn report_counts_failures_across_mixed_runs() {
    let dir = tempfile::tempdir().unwrap();
    let doubled = fixture("coalgebra_doubled.json");
    write_run(dir.path(), "1.json", &["verify", "ruan"]);
    write_run(dir.path(), "2.json", &["verify", "coalgebra", p(&doubled)]);
    write_run(dir.path(), "3.json", &["verify", "coalgebra", p(&doubled)]);
    write_run(dir.path(), "4.json", &["verify", "coalgebra"]);
    let (code, v) = run(&["report", p(dir.path())]);
    assert_eq!(code, 0);
    assert_eq!(v["runs"], 4);
    assert_eq!(v["suites"]["coalgebra"]["runs"], 3);
    assert_eq!(v["suites"]["coalgebra"]["failed_runs"], 2);
    assert_eq!(v["failures"], 8);
    let (_, again) = run(&["report", p(dir.path())]);
    assert_eq!(v, again);
}

#[test]
fn corrupt_report_exits_2_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), "good.json", &["verify", "ruan"]);
    std::fs::write(dir.path().join("broken.json"), "{\"suite\": ").unwrap();
    let out = opspace(&["report", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json"));
}

#[test]
fn empty_report_dir_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("notes.txt"), "not a report").unwrap();
    assert_eq!(opspace(&["report", p(dir.path())]).status.code(), Some(5));
}
