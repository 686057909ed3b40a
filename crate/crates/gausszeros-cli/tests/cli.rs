use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gausszeros")).args(args).env_remove("GAUSSZEROS_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Vec<Value> {
    ok(args).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn rho_examples() {
    let r = json(&["rho", "--model", "bargmann-fock", "--points", "0"]);
    assert!((num(&r[0], "rho") - 1.0 / PI).abs() < 1e-15);
    let r = json(&["rho", "--model", "bargmann-fock", "--points", "0,0"]);
    assert_eq!(num(&r[0], "rho"), 0.0);
    let a = json(&["rho", "--points", "0,0.5", "--partition", "{0,1}"]);
    let b = json(&["rho", "--points", "0,0.5", "--partition", "{0},{1}"]);
    assert!((num(&a[0], "rho") - num(&b[0], "rho")).abs() < 1e-12);
    let several = json(&["rho", "--points", "0", "--points", "-1,2"]);
    assert_eq!(several.len(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["rho", "--points", "0,0", "--partition", "{0},{1}"]), 2);
    assert_eq!(code(&["clustering", "--points", "0,0.5", "--partition", "{0},{1}"]), 2);
    assert_eq!(code(&["rho", "--model", "nonexistent", "--points", "0"]), 4);
    assert_eq!(code(&["frobnicate"]), 4);
    assert_eq!(code(&["fcurve", "--step", "0"]), 4);
    assert_eq!(code(&["moments", "--phi", "triangle:0,1"]), 4);
    assert_eq!(code(&["--help"]), 0);

    let dir = tempfile::tempdir().unwrap();
    let strict = dir.path().join("strict.json");
    std::fs::write(&strict, r#"{"quadrature":{"truncation_radius":40,"abs_tolerance":1e-14,"max_nodes":100}}"#).unwrap();
    assert_eq!(code(&["sigma2", "--config", strict.to_str().unwrap()]), 3);
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"colour":"blue"}"#).unwrap();
    assert_eq!(code(&["sigma2", "--config", unknown.to_str().unwrap()]), 4);
}

#[test]
fn sigma2_outputs() {
    let v = &json(&["sigma2", "--model", "bargmann-fock"])[0];
    assert!((num(v, "sigma2") - 0.18).abs() < 5e-3);
    assert_eq!(v["converged"], Value::Bool(true));
    for m in ["bargmann-fock", "sinc-sqrt3", "cauchy"] {
        let v = &json(&["sigma2", "--model", m])[0];
        assert!(num(v, "sigma2") >= num(v, "lower_bound") && num(v, "lower_bound") > 0.0, "{m}: {v}");
    }
    let fine = num(&json(&["sigma2", "--model", "cauchy", "--tolerance", "1e-10"])[0], "sigma2");
    let coarse = num(&json(&["sigma2", "--model", "cauchy", "--tolerance", "1e-6"])[0], "sigma2");
    assert!((fine - coarse).abs() < 1e-6);
}

#[test]
fn fcurve_table() {
    let out = ok(&["fcurve", "--model", "bargmann-fock", "--zmax", "8", "--step", "0.01"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("z,F"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((first[0] - 0.01).abs() < 1e-12);
    assert!((first[1] + 1.0 / (PI * PI)).abs() < 2e-3);
    assert_eq!(out.lines().count(), 801);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--R", "50", "--n", "200", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let threaded = Command::new(env!("CARGO_BIN_EXE_gausszeros")).args(args).env("GAUSSZEROS_THREADS", "3").output().unwrap();
    assert_eq!(a.stdout, threaded.stdout);
    let rows: Vec<Value> = String::from_utf8(a.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r["count"].is_u64() && r["stat"].is_f64()));
    let other = ok(&["simulate", "--R", "50", "--n", "200", "--seed", "8"]);
    assert_ne!(other, ok(&args));
}

#[test]
fn simulate_summary_csv() {
    let out = ok(&["simulate", "--R", "20", "--n", "100", "--format", "csv"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("quantity,estimate,stderr,ci_lo,ci_hi,n"));
    assert!(out.lines().any(|l| l.starts_with("mean_count,")));
}

#[test]
fn moments_report_prediction() {
    let rows = json(&["moments", "--p", "4", "--R", "20", "--n", "200", "--phi", "indicator:0,1"]);
    let get = |q: &str| rows.iter().find(|r| r["quantity"] == q).unwrap_or_else(|| panic!("no {q}"));
    let m2 = num(get("predicted_m2"), "estimate");
    let m4 = num(get("predicted_m4"), "estimate");
    assert!((m4 - 3.0 * m2 * m2).abs() < 1e-9 * m4);
    let e4 = get("m4");
    assert!(num(e4, "ci_lo") <= num(e4, "estimate") && num(e4, "estimate") <= num(e4, "ci_hi"));
}

#[test]
fn vanishing_and_clustering() {
    let v = &json(&["vanishing", "--points", "0,0"])[0];
    assert!((num(v, "ell") - 1.0 / (4.0 * PI)).abs() < 1e-12);
    let c = &json(&["clustering", "--points", "0,8", "--partition", "{0},{1}"])[0];
    assert!((num(c, "ratio") - 1.0).abs() < 1e-6);
}

#[test]
fn config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dumped = ok(&["moments", "--R", "30", "--phi", "gaussian:0,0.5", "--tolerance", "1e-9", "--dump-config"]);
    let path = dir.path().join("run.json");
    std::fs::write(&path, &dumped).unwrap();
    let again = ok(&["moments", "--config", path.to_str().unwrap(), "--dump-config"]);
    assert_eq!(dumped, again);
    let overridden: Value = serde_json::from_str(&ok(&["moments", "--config", path.to_str().unwrap(), "--R", "40", "--dump-config"])).unwrap();
    assert_eq!(overridden["R"], 40.0);
    assert_eq!(overridden["phi"], "gaussian:0,0.5");
}

#[test]
fn help_lists_every_flag() {
    let help = ok(&["--help"]);
    for flag in [
        "--model", "--points", "--partition", "--R", "--n", "--seed", "--threads", "--tolerance", "--zmax", "--step",
        "--phi", "--out", "--format", "--dump-config",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn out_file_and_spectral_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("g.json");
    std::fs::write(&table, r#"{"xi":[0,1,2,3],"g":[1,0.6,0.2,0],"tail":{"kind":"compact"}}"#).unwrap();
    let out = dir.path().join("rho.json");
    let printed = ok(&["rho", "--model", table.to_str().unwrap(), "--points", "1.5", "--out", out.to_str().unwrap()]);
    assert!(printed.is_empty());
    let v: Value = serde_json::from_str(std::fs::read_to_string(&out).unwrap().trim()).unwrap();
    assert!((num(&v, "rho") - 1.0 / PI).abs() < 1e-8);
}
