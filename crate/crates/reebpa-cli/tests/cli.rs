//! End-to-end runs of the binary: contract examples, exit codes, report
//! envelope, and byte determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reebpa"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("reebpa-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_config(name: &str, config: &str, extra: &[&str]) -> Output {
    let dir = workdir(name);
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    bin()
        .arg("--config")
        .arg(&path)
        .args(extra)
        .output()
        .unwrap()
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn lefschetz_standard_pa_example() {
    let out = run_config(
        "lefschetz",
        r#"{"cmd":"lefschetz","model":"standard_pa","n":4,"k":0,"lambda":2}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out);
    assert_eq!(rep["schema"], "reebpa/1");
    assert_eq!(rep["cmd"], "lefschetz");
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["result"]["index"], -3);
    let hash = rep["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert!(rep["tool_version"].as_str().unwrap().contains('.'));
}

#[test]
fn census_cat_map_example() {
    let out = run_config("census", r#"{"cmd":"census","matrix":[[2,1],[1,1]],"kmax":2}"#, &[]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["result"]["orbit_records"].as_array().unwrap().len(), 3);
    assert_eq!(rep["result"]["levels"][0]["fixed_points"], 1);
    assert_eq!(rep["result"]["levels"][1]["fixed_points"], 5);
}

#[test]
fn verify_negative_axis_is_a_certified_failure() {
    let out = run_config("verify", r#"{"cmd":"verify","fixture":"neg_axis"}"#, &[]);
    assert_eq!(out.status.code(), Some(2), "certified failure exits 2");
    let rep = report(&out);
    assert_eq!(rep["pass"], false);
    let violations = rep["result"]["violations"].as_array().unwrap();
    assert!(!violations.is_empty());
    assert!(violations[0]["density"].as_f64().unwrap() <= 0.0);
}

#[test]
fn unknown_key_is_rejected_with_a_pointer() {
    let out = run_config(
        "unknown-key",
        r#"{"cmd":"census","matrix":[[2,1],[1,1]],"kmax":2,"bogus":1}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"/bogus\""), "stderr: {err}");
    assert!(out.stdout.is_empty(), "no report on config errors");
}

#[test]
fn malformed_configs_exit_one() {
    for (name, cfg) in [
        ("not-json", "]["),
        ("no-cmd", r#"{"matrix":[[2,1],[1,1]]}"#),
        ("bad-cmd", r#"{"cmd":"meow"}"#),
        ("bad-model", r#"{"cmd":"lefschetz","model":"cat"}"#),
        ("non-hyperbolic", r#"{"cmd":"census","matrix":[[1,1],[0,1]],"kmax":2}"#),
        ("bad-workers", r#"{"cmd":"model","matrix":[[2,1],[1,1]],"workers":0}"#),
    ] {
        let out = run_config(name, cfg, &[]);
        assert_eq!(out.status.code(), Some(1), "case {name}");
        assert!(!out.stderr.is_empty(), "case {name} must explain itself");
    }
}

#[test]
fn growth_reports_are_byte_identical_across_runs_and_workers() {
    let cfg = r#"{"cmd":"growth","matrix":[[2,1],[1,1]],"kmax":8}"#;
    let a = run_config("growth-a", cfg, &["--seed", "7"]);
    let b = run_config("growth-b", cfg, &["--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "same config and seed, same bytes");

    // The parallel smoothing path must not leak the pool size either.
    let cfg = r#"{"cmd":"smooth","fixture":"bp","epsilon":0.5}"#;
    let one = run_config("smooth-1", cfg, &["--workers", "1"]);
    let four = run_config("smooth-4", cfg, &["--workers", "4"]);
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout, "worker count may vary");
}

#[test]
fn seed_changes_only_the_envelope() {
    let cfg = r#"{"cmd":"model","model":"standard_pa","n":3,"k":1,"lambda":1.5}"#;
    let a = report(&run_config("seed-a", cfg, &["--seed", "1"]));
    let b = report(&run_config("seed-b", cfg, &["--seed", "2"]));
    assert_eq!(a["seed"], 1);
    assert_eq!(b["seed"], 2);
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["result"]["prongs"], 3);
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = workdir("out-flag");
    let cfg_path = dir.join("config.json");
    let out_path = dir.join("report.json");
    fs::write(&cfg_path, r#"{"cmd":"torsion","k":2,"class":[0,-1]}"#).unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "report goes to the file");
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(rep["result"]["generators"].as_array().unwrap().len(), 4);
    assert_eq!(rep["result"]["bound"], 4);
    assert_eq!(rep["result"]["action"], 1.0);
}

#[test]
fn torsion_rejects_imprimitive_classes() {
    let out = run_config("torsion-bad", r#"{"cmd":"torsion","k":1,"class":[2,4]}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn workers_env_variable_is_honored() {
    let dir = workdir("env-workers");
    let path = dir.join("config.json");
    fs::write(&path, r#"{"cmd":"smooth","fixture":"std"}"#).unwrap();
    let out = bin()
        .arg("--config")
        .arg(&path)
        .env("REEBPA_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = bin()
        .arg("--config")
        .arg(&path)
        .env("REEBPA_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn chain_command_certifies_the_cat_census() {
    let out = run_config("chain", r#"{"cmd":"chain","matrix":[[2,1],[1,1]],"kmax":8}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out);
    assert_eq!(rep["result"]["hypertight"]["pass"], true);
    assert_eq!(rep["result"]["cases"]["mixed"], 0);
    let rows = rep["result"]["ch"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows[7]["certified"].as_u64().unwrap() >= 1);
}

#[test]
fn growth_csv_is_plot_ready() {
    let dir = workdir("csv");
    let cfg_path = dir.join("config.json");
    let csv_path = dir.join("growth.csv");
    fs::write(
        &cfg_path,
        format!(
            r#"{{"cmd":"growth","matrix":[[2,1],[1,1]],"kmax":8,"csv":{}}}"#,
            serde_json::to_string(&csv_path).unwrap()
        ),
    )
    .unwrap();
    let out = bin().arg("--config").arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("l,gf"));
    assert_eq!(lines.next(), Some("1,1"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn orbit_search_finds_the_contracting_user_orbit() {
    let out = run_config(
        "orbits-user",
        r#"{"cmd":"orbits","flow":"user","ft":"1","fr":"0.2*(0.5 - r)","fth":"0.3*sin(th)","radius":0.99,"seeds_per_axis":8}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out);
    let orbits = rep["result"]["orbits"].as_array().unwrap();
    assert!(!orbits.is_empty());
    let r = orbits[0]["point"][0].as_f64().unwrap();
    assert!((r - 0.5).abs() < 1e-6, "attractor radius {r}");
}
