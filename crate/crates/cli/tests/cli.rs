use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn sampdisc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sampdisc"))
        .args(args)
        .current_dir(dir)
        .env_remove("SAMPDISC_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, v.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn trig_space(n: i64) -> Value {
    let freqs: Vec<Vec<i64>> = (-n..=n).map(|k| vec![k]).collect();
    json!({"system": {"kind": "trig", "frequencies": freqs}, "domain": {"kind": "torus", "dim": 1, "grid_size": 64}})
}

#[test]
fn disc_equispaced_trig_is_exact() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "trig3.json", &json!({"space": trig_space(3), "pointset": {"method": "equispaced", "m": 7}}));
    let out = sampdisc(&["disc", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    for side in ["D_L", "D_R"] {
        assert!((r[side].as_f64().unwrap() - 1.0).abs() < 1e-9, "{side}: {}", r[side]);
    }
    assert_eq!(r["n"], json!(7));
}

#[test]
fn unknown_subcommand_exits_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(sampdisc(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn invalid_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", &json!({"space": 1}));
    assert_eq!(sampdisc(&["disc", "--config", &bad], dir.path()).status.code(), Some(2));
    assert_eq!(sampdisc(&["disc"], dir.path()).status.code(), Some(2));
    assert_eq!(sampdisc(&["experiment", "no_such_thing"], dir.path()).status.code(), Some(2));
    assert_eq!(sampdisc(&["experiment", "dft_exact", "--param", "bogus=1"], dir.path()).status.code(), Some(2));
    let extra = write(dir.path(), "extra.json", &json!({"name": "dft_exact", "colour": "red"}));
    assert_eq!(sampdisc(&["experiment", "--config", &extra], dir.path()).status.code(), Some(2));
}

#[test]
fn experiment_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = ["experiment", "ric1_scaling", "--seed", "7", "--param", "n_max=3", "--param", "m_multipliers=[2]"];
    let a = sampdisc(&args, dir.path());
    let b = sampdisc(&args, dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let r = stdout_json(&a);
    assert_eq!(r["config"]["seed"], json!(7));
    assert_eq!(r["config"]["params"]["n_max"], json!(3));
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "pts.json", &json!({"space": trig_space(1), "pointset": {"method": "random", "m": 5}}));
    let flag = sampdisc(&["points", "--config", &cfg, "--seed", "11"], dir.path());
    let env = Command::new(env!("CARGO_BIN_EXE_sampdisc"))
        .args(["points", "--config", &cfg])
        .env("SAMPDISC_SEED", "11")
        .output()
        .unwrap();
    let other = sampdisc(&["points", "--config", &cfg, "--seed", "12"], dir.path());
    assert_eq!(flag.status.code(), Some(0));
    assert_eq!(flag.stdout, env.stdout);
    assert_ne!(flag.stdout, other.stdout);
    assert_eq!(stdout_json(&flag)["points"].as_array().unwrap().len(), 5);
}

#[test]
fn out_directory_and_verify() {
    let dir = TempDir::new().unwrap();
    let out = sampdisc(&["experiment", "lunin_bench", "--param", "instances=10", "--out", "reports"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json_path = dir.path().join("reports/lunin_bench.json");
    let csv = fs::read_to_string(dir.path().join("reports/lunin_bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11);

    let ok = sampdisc(&["verify", json_path.to_str().unwrap()], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(stdout_json(&ok)["identical"], json!(true));

    let mut tampered: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    tampered["cases"][0]["values"]["ratio"] = json!(0.5);
    let t = write(dir.path(), "tampered.json", &tampered);
    assert_eq!(sampdisc(&["verify", &t], dir.path()).status.code(), Some(1));
}

#[test]
fn failing_case_exits_1() {
    let dir = TempDir::new().unwrap();
    let out = sampdisc(
        &["experiment", "lunin_bench", "--param", "instances=5", "--param", "required_fraction=1.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["pass"], json!(false));
}

#[test]
fn matrix_norms_and_selection() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "m.json",
        &json!({"matrix": {"re": [[1, 0], [0, 1], [1, 1], [2, -1]]}, "norms": [[1, 2], ["inf", "inf"]], "select_rows": 2}),
    );
    let out = sampdisc(&["matrix", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    // Largest column 2-norm, then largest row 1-norm.
    assert!((r["norms"][0]["value"].as_f64().unwrap() - 6f64.sqrt()).abs() < 1e-9);
    assert!((r["norms"][1]["value"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert_eq!(r["selection"]["indices"].as_array().unwrap().len(), 2);
}

#[test]
fn space_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.json", &trig_space(2));
    let r = stdout_json(&sampdisc(&["space", "--config", &cfg], dir.path()));
    assert_eq!(r["N"], json!(5));
    assert!((r["nikolskii_2_inf"].as_f64().unwrap() - 5f64.sqrt()).abs() < 1e-9);
}

#[test]
fn recover_audit_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        &json!({
            "theorem": "BT1",
            "model": {"subspace": {"system": {"kind": "monomials", "degree": 2}, "domain": {"kind": "unit-interval", "grid_size": 128}}},
            "pointset": {"points": [[0.1], [0.3], [0.5], [0.7], [0.9]]},
            "target": {"kind": "fa", "a": 0.2},
            "restarts": 4
        }),
    );
    let out = sampdisc(&["recover", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert_eq!(r["applicable"], json!(true));
    assert!(r["audits"][0]["holds"].as_bool().unwrap());

    let wrong = write(
        dir.path(),
        "w.json",
        &json!({
            "theorem": "BT1",
            "model": {"subspace": {"system": {"kind": "monomials", "degree": 2}, "domain": {"kind": "unit-interval"}}},
            "pointset": {"points": [[0.5]]},
            "target": {"kind": "element", "coefficients": {"re": [1.0], "im": [0.0]}}
        }),
    );
    assert_eq!(sampdisc(&["recover", "--config", &wrong], dir.path()).status.code(), Some(2));
}
