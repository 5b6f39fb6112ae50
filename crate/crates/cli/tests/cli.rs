use std::path::Path;
use std::process::{Command, Output};

fn ngmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ngmix"))
        .args(args)
        .env_remove("NGMIX_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "schema_version": 1,
  "model": {"process": {"family": "normal", "operator": {"kind": "exponential", "kappa": 0.7, "tau": 1.2}}},
  "init": {"beta": [1.0, -0.5], "sigma": 0.5},
  "iters": 40,
  "louis_draws": 20,
  "simulate": {"subjects": 12, "visits": 4},
  "predict": {"mode": "smooth", "draws": 50, "burn_in": 5}
}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let a = ngmix(&["simulate", "--config", &cfg, "--seed", "4"]);
    let b = ngmix(&["simulate", "--config", &cfg, "--seed", "4"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 12 * 4);
    assert!(text.starts_with("subject_id,time,y"));
}

#[test]
fn fit_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let data = dir.path().join("data.csv");
    let data = data.to_str().unwrap();
    assert!(ngmix(&["simulate", "--config", &cfg, "--out", data]).status.success());
    let out = dir.path().join("fit");
    let fit = ngmix(&["fit", "--config", &cfg, "--data", data, "--out", out.to_str().unwrap()]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    for f in ["params.json", "fixed_effects.csv", "trace.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 41);
    let fe = std::fs::read_to_string(out.join("fixed_effects.csv")).unwrap();
    assert!(fe.starts_with("term,Estimate,SE,p-lower,p-upper"));

    let pred = dir.path().join("pred.csv");
    let p = ngmix(&[
        "predict",
        "--config",
        &cfg,
        "--data",
        data,
        "--params",
        out.join("params.json").to_str().unwrap(),
        "--out",
        pred.to_str().unwrap(),
        "--subject",
        "s00002",
    ]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    let text = std::fs::read_to_string(&pred).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("s00002,")));
    assert!(text.lines().count() > 1);
}

#[test]
fn tv_curve_has_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tv.csv");
    let r = ngmix(&["tv", "--grid", "0.01:100:50", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn egfr_prints_a_value() {
    let r = ngmix(&["egfr", "--scr", "88.4", "--age", "50"]);
    assert!(r.status.success());
    let v: f64 = String::from_utf8(r.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 79.1).abs() < 0.1, "{v}");
}

#[test]
fn errors_and_exit_codes() {
    assert_eq!(ngmix(&["fit", "--bogus"]).status.code(), Some(2));
    let r = ngmix(&["fit", "--config", "/nonexistent/c.json", "--data", "x.csv", "--out", "o"]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error: fit:"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tv.csv");
    let r = ngmix(&["tv", "--grid", "5:1:3", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}
