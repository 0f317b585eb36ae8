use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mpsup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpsup")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generated(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full: Vec<&str> = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", p(&path)]);
    let out = mpsup(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_ghz_emits_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let file = generated(dir.path(), "ghz.json", &["ghz", "--n", "6"]);
    let out = mpsup(&["analyze", p(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["normal"], false);
    assert_eq!(r["block_count"], 2);
    assert!(r["blocks"].as_array().unwrap().iter().all(|b| b["D"] == 1));
    assert_eq!(r["product"]["kind"], "product");
    assert_eq!(r["product"]["terms"].as_array().unwrap().len(), 2);
    assert!(r["product"]["reconstruction_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn analyze_random_normal_reports_obstruction() {
    let dir = tempfile::tempdir().unwrap();
    let file = generated(dir.path(), "r.json", &["random", "--bond", "2", "--d", "2", "--n", "6", "--seed", "3"]);
    let out = mpsup(&["analyze", p(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["normal"], true);
    assert_eq!(r["block_count"], 1);
    assert!(r["blocks"][0]["eta"].as_f64().unwrap() < 1.0);
    assert_eq!(r["product"]["kind"], "obstruction");
    assert_eq!(r["product"]["message"], "block D=2");
}

#[test]
fn analyze_rejects_bond_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = r#"{"kind":"chain","d":2,"boundary":"trace","tensors":[
        [[[[1,0],[0,0]],[[0,0],[1,0]]],[[[0,0],[0,0]],[[0,0],[0,0]]]],
        [[[[1,0]]],[[[0,0]]]]
    ]}"#;
    std::fs::write(&path, text).unwrap();
    let out = mpsup(&["analyze", p(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bond mismatch at site 2"), "{err}");
}

#[test]
fn analyze_nilpotent_tensor_is_structural_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nil.json");
    let text = r#"{"kind":"ti","d":2,"boundary":"trace","N":4,"tensors":[
        [[[[0,0],[1,0]],[[0,0],[0,0]]],[[[0,0],[0,0]],[[0,0],[0,0]]]]
    ]}"#;
    std::fs::write(&path, text).unwrap();
    let out = mpsup(&["analyze", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("structural failure"));
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let w6 = generated(dir.path(), "w6.msv", &["w", "--n", "6", "--state", "--normalized"]);
    let out = mpsup(&["certify", p(&w6), "--bond", "2", "--eps", "1e-9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["eps_star"].as_f64().unwrap() < 1e-12);

    let g = generated(dir.path(), "ghz.msv", &["ghz", "--n", "6", "--state", "--normalized"]);
    let out = mpsup(&["certify", p(&g), "--bond", "1", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
    let eps = json(&out)["eps_star"].as_f64().unwrap();
    assert!((eps - 0.5f64.sqrt()).abs() < 1e-12);

    let r = generated(dir.path(), "r10.msv", &["random", "--n", "10", "--state", "--normalized"]);
    let out = mpsup(&["certify", p(&r), "--bond", "2", "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(3));
    let rep = json(&out);
    assert_eq!(rep["pass"], false);
    assert_eq!(rep["worst"]["order"].as_array().unwrap().len(), 10);
}

#[test]
fn certify_from_mps_json_needs_length_for_ti() {
    let dir = tempfile::tempdir().unwrap();
    let file = generated(dir.path(), "r.json", &["random"]);
    let out = mpsup(&["certify", p(&file), "--bond", "4", "--eps", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    let out = mpsup(&["certify", p(&file), "--bond", "8", "--eps", "1e-9", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn size_cap_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = generated(dir.path(), "ghz.json", &["ghz", "--n", "12"]);
    let out = mpsup(&["certify", p(&file), "--bond", "2", "--eps", "0.1", "--amp-cap", "100"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reproduce_unknown_name_lists_valid_names() {
    let out = mpsup(&["reproduce", "table3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in mpsup_cli::experiments::EXPERIMENTS {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn reproduce_table2_csv_has_reference_columns() {
    let out = mpsup(&["reproduce", "table2", "--n", "8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("state,quantity,value,provenance"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let find = |state: &str, q: &str, prov: &str| {
        rows.iter()
            .find(|r| r[0] == state && r[1] == q && r[3] == prov)
            .map(|r| r[2].to_string())
    };
    assert_eq!(find("W_8", "bond_dimension", "reference").as_deref(), Some("2"));
    assert_eq!(find("W_8", "tensor_rank", "reference").as_deref(), Some("8"));
    assert_eq!(find("D_4_8", "bond_dimension", "measured").as_deref(), Some("5"));
    assert_eq!(find("chi_3_8", "schmidt_rank_balanced", "measured").as_deref(), Some("4"));
    assert!(rows.iter().all(|r| ["reference", "derived", "measured"].contains(&r[3])));
}

#[test]
fn reproduce_border_w_reports_slope_two() {
    let out = mpsup(&["reproduce", "border-w"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let slope = r["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|row| row["eps"] == "fit" && row["quantity"] == "slope" && row["provenance"] == "measured")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!((slope - 2.0).abs() < 0.05);
}

#[test]
fn reproduce_comb_purity_has_eta_power_column() {
    let out = mpsup(&["reproduce", "comb-purity", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("t0:n=3:k=6,eta_n,"));
    assert!(csv.contains("t0:n=3:k=6,purity,"));
}

#[test]
fn thread_env_var_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_mpsup"))
        .args(["reproduce", "border-w"])
        .env("MPSUP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_mpsup"))
        .args(["reproduce", "border-w"])
        .env("MPSUP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_flags_are_input_errors() {
    assert_eq!(mpsup(&["reproduce", "border-w", "--tol-rank", "-1"]).status.code(), Some(1));
    assert_eq!(mpsup(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(mpsup(&["--help"]).status.code(), Some(0));
}
