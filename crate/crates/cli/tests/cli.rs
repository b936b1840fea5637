use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
}

fn randrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randrec"))
        .args(args)
        .env_remove("RANDREC_SEED")
        .env_remove("RANDREC_THREADS")
        .env_remove("RANDREC_CONFIG")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn check_worked_model_holds_at_one() {
    let m = model("worked.json");
    let v = json(&randrec(&["check", "--model", m.to_str().unwrap()]));
    assert_eq!(v["alpha"], 1.0);
    for a in ["a1", "a2", "a3", "a4"] {
        assert_eq!(v[a]["holds"], true, "{a}");
    }
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn solve_alpha_without_root_exits_2() {
    let m = model("contracting_light.json");
    let out = randrec(&["solve-alpha", "--model", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Kesten"), "{}", stderr(&out));
}

#[test]
fn solve_alpha_lattice() {
    let m = model("kesten_lattice.json");
    let v = json(&randrec(&["solve-alpha", "--model", m.to_str().unwrap()]));
    assert!((v["alpha"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-8);
    assert_eq!(v["convex"], true);
}

#[test]
fn tail_constants_signed() {
    let m = model("signed.json");
    let v = json(&randrec(&[
        "tail-constants",
        "--model",
        m.to_str().unwrap(),
    ]));
    assert!(v["K"].is_null());
    assert!((v["K_plus"][0].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert!((v["K_minus"][0].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn report_on_degenerate_line_passes() {
    let m = model("degenerate.json");
    let v = json(&randrec(&[
        "report",
        "--model",
        m.to_str().unwrap(),
        "--samples",
        "20000",
    ]));
    assert_eq!(v["theory"]["degenerate"]["is_degenerate"], true);
    assert_eq!(v["theory"]["degenerate"]["c"], 2.0);
    for key in ["K", "K_plus", "K_minus"] {
        assert_eq!(v["theory"][key], serde_json::json!([0.0]), "{key}");
    }
    assert_eq!(v["pass"], true);
    assert_eq!(v["config"]["samples"], 20000);
}

#[test]
fn report_fields_are_stable() {
    let m = model("worked.json");
    let v = json(&randrec(&[
        "report",
        "--model",
        m.to_str().unwrap(),
        "--samples",
        "200000",
    ]));
    let theory = &v["theory"];
    for key in [
        "alpha",
        "K",
        "K_plus",
        "K_minus",
        "rho_G",
        "lambda_curve",
        "degenerate",
    ] {
        assert!(theory.get(key).is_some(), "{key}");
    }
    assert_eq!(theory["regime"], "grey");
}

#[test]
fn simulate_is_replayable_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("worked.json");
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("s{threads}.csv"));
        let o = randrec(&[
            "simulate",
            "--model",
            m.to_str().unwrap(),
            "--samples",
            "3000",
            "--shards",
            "4",
            "--seed",
            "42",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    assert!(text.starts_with("state,r_value,shard,index\n"));
    assert_eq!(text.lines().count(), 3001);
}

#[test]
fn reports_are_byte_identical() {
    let m = model("kesten.json");
    let args = [
        "report",
        "--model",
        m.to_str().unwrap(),
        "--samples",
        "20000",
        "--blocks",
        "200",
    ];
    let a = randrec(&args);
    let b = randrec(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("iid_grey.json");
    let csv = dir.path().join("s.csv");
    let o = randrec(&[
        "simulate",
        "--model",
        m.to_str().unwrap(),
        "--samples",
        "200000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("e.json");
    let o = randrec(&[
        "estimate",
        "--in",
        csv.to_str().unwrap(),
        "--alpha",
        "1.5",
        "--window",
        "q:0.99,0.9999",
        "--model",
        m.to_str().unwrap(),
        "--per-state",
        "--json",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["alpha"], 1.5);
    assert_eq!(v["n_samples"], 200000);
    assert_eq!(v["states"], serde_json::json!(["s"]));
    // pooled and per-state entries for both signs
    assert_eq!(v["K_hat"].as_array().unwrap().len(), 4);
    let k = 1.0 / (1.0 - 0.5f64.powf(1.5));
    let kp = v["K_hat"][0]["k"].as_f64().unwrap();
    assert!((kp - k).abs() < 0.25 * k, "{kp} vs {k}");
}

#[test]
fn blocks_csv() {
    let m = model("kesten.json");
    let o = randrec(&[
        "blocks",
        "--model",
        m.to_str().unwrap(),
        "--blocks",
        "50",
        "--r",
        "0.9",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("start_state,length,a,b\n"));
    assert_eq!(text.lines().count(), 51);
    assert!(text.lines().skip(1).all(|l| l.starts_with("s,")));
}

#[test]
fn invalid_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"states": ["s"], "P": [[1.0]], "laws": {"s": {"q_law": {"type": "nope"}}}}"#,
    )
    .unwrap();
    let o = randrec(&["check", "--model", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("laws.s.q_law"), "{}", stderr(&o));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 3, "shards": 2}"#).unwrap();
    let m = model("worked.json");
    let o = randrec(&[
        "check",
        "--model",
        m.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("unknown field `shards`"),
        "{}",
        stderr(&o)
    );

    let o = randrec(&[
        "simulate",
        "--model",
        m.to_str().unwrap(),
        "--method",
        "sideways",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 3, "tol_root": 1e-9}"#).unwrap();
    let m = model("worked.json");
    let base = [
        "check",
        "--model",
        m.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ];
    let v = json(&randrec(&base));
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["config"]["tolerances"]["root"], 1e-9);

    let out = Command::new(env!("CARGO_BIN_EXE_randrec"))
        .args(base)
        .env("RANDREC_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 11);

    let mut with_flag = base.to_vec();
    with_flag.extend(["--seed", "12"]);
    let out = Command::new(env!("CARGO_BIN_EXE_randrec"))
        .args(with_flag)
        .env("RANDREC_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 12);
}

#[test]
fn non_contracting_simulation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("grow.json");
    std::fs::write(
        &m,
        r#"{"states": ["s"], "P": [[1.0]], "laws": {"s": {
            "q_law": {"type": "constant", "value": 1.0},
            "m_law": {"type": "constant", "value": 1.5},
            "coupling": {"type": "independent"}}}}"#,
    )
    .unwrap();
    let o = randrec(&[
        "simulate",
        "--model",
        m.to_str().unwrap(),
        "--samples",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = randrec(&["report", "--model", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
