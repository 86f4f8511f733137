use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mlz() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mlz"));
    c.env_remove("MLZ_DEFAULT_TOL");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_manifest(dir: &Path, stem: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.manifest.json"))).unwrap()).unwrap()
}

const FOUR_STATE: &str = r#"{
  "kind": "four_state_sweep",
  "name": "fs",
  "config": {"t_max": 200},
  "params": {"b": 1, "g": 0.5, "phi": [3.141592653589793, 0, 1.5707963267948966]}
}"#;

#[test]
fn shipped_scenarios_validate() {
    let mut n = 0;
    for entry in fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        let o = mlz().arg("validate").arg(&path).output().unwrap();
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stdout));
        assert_eq!(stdout_json(&o)["status"], "valid");
        n += 1;
    }
    assert!(n >= 8);
}

#[test]
fn missing_field_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"kind": "chain_avg_n", "params": {"beta": 0.5, "n_max": 12}}"#);
    let o = mlz().arg("run").arg(&p).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let j = stdout_json(&o);
    assert_eq!(j["error"], "validation");
    assert_eq!(j["errors"][0]["field"], "params.g_base");
    let o = mlz().arg("validate").arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["errors"][0]["field"], "params.g_base");
    assert!(!dir.path().join("chain_avg_n.csv").exists());
}

#[test]
fn zero_tau_predicts_degenerate_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "inv.json",
        r#"{"kind": "invariance", "params": {
            "family": {"gamma12": 0.354, "gamma13": 0.327, "gamma23": 0.3, "eps0": 0.52, "beta1": 1, "beta2": 1},
            "tau": [0, 1, 2]}}"#,
    );
    let o = mlz().arg("validate").arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let j = stdout_json(&o);
    assert!(j["errors"][0]["message"].as_str().unwrap().contains("DegenerateSlopes"));
}

#[test]
fn four_state_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "fs.json", FOUR_STATE);
    let mut csvs = Vec::new();
    for (i, threads) in ["1", "2", "1"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = mlz().args(["run"]).arg(&p).arg("--out-dir").arg(&out).args(["--threads", threads]).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
        assert_eq!(stdout_json(&o)["converged"], true);
        csvs.push(fs::read(out.join("fs.csv")).unwrap());
        let m = read_manifest(&out, "fs");
        assert_eq!(m["converged"], true);
        assert_eq!(m["rows"], 3);
        assert_eq!(m["config"]["t_max"], 200.0);
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);

    let text = String::from_utf8(csvs[0].clone()).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phi,phi_over_pi,P_1to4_numeric,P_1to4_exact,P_1to1_numeric,P_1to1_exact");
    // rows come out sorted by the sweep key
    let phis: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    for (got, want) in phis.iter().zip([0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI]) {
        assert!((got - want).abs() < 1e-11, "{phis:?}");
    }
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] - v[3]).abs() < 1e-2, "{l}");
        assert!((v[4] - v[5]).abs() < 1e-2, "{l}");
    }
    let at_pi: Vec<f64> = lines[3].split(',').map(|x| x.parse().unwrap()).collect();
    assert!(at_pi[2] < 1e-3);
}

#[test]
fn invariance_columns_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "inv.json",
        r#"{"kind": "invariance", "name": "inv", "params": {
            "family": {"gamma12": 0.354, "gamma13": 0.327, "gamma23": 0.3, "eps0": 0.52, "beta1": 1, "beta2": 1},
            "tau": [1, 2]}}"#,
    );
    let o = mlz()
        .arg("run")
        .arg(&p)
        .arg("--out-dir")
        .arg(dir.path())
        .args(["--override", "config.t_max=150", "--override", "output=sweep.csv"])
        .env("MLZ_DEFAULT_TOL", "1e-9")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,P_2to1,P_2to2,P_2to3");
    assert_eq!(lines.len(), 3);
    let rows: Vec<Vec<f64>> = lines[1..].iter().map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    for (a, b) in rows[0][1..].iter().zip(&rows[1][1..]) {
        assert!((a - b).abs() < 2e-3);
    }
    for r in &rows {
        assert!((r[1..].iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }
    let m = read_manifest(dir.path(), "sweep");
    assert_eq!(m["config"]["t_max"], 150.0);
    assert_eq!(m["config"]["rel_tol"], 1e-9);
    assert_eq!(m["env_default_tol"], "1e-9");
    assert_eq!(m["converged"], true);
    assert!(m["summary"]["max_spread"].as_f64().unwrap() < 2e-3);
}

#[test]
fn dykhne_sweep_columns() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.json", r#"{"kind": "dykhne_sweep", "params": {"b": 1, "g": 2, "eps": [2, 6]}}"#);
    let o = mlz().arg("run").arg(&p).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(dir.path().join("dykhne_sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,P_dykhne,P_numeric");
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - v[2]).abs() <= 0.05, "{l}");
    }
}

#[test]
fn chain_and_report_columns() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "c.json",
        r#"{"kind": "chain_avg_n", "config": {"t_max": 200}, "params": {"beta": 0.5, "n_max": 6, "g_base": 0.1}}"#,
    );
    let o = mlz().arg("run").arg(&p).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(dir.path().join("chain_avg_n.csv")).unwrap();
    assert!(text.starts_with("g,n_avg_numeric,n_avg_exact\n0.1,"));

    let o = mlz().arg("run").arg(scenarios().join("integrability.json")).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let m = read_manifest(dir.path(), "integrability");
    assert!(m["summary"]["residual_max"].as_f64().unwrap() <= 1e-8);
    assert!(m["summary"]["control_min"].as_f64().unwrap() > 1e-3);
    let text = fs::read_to_string(dir.path().join("integrability.csv")).unwrap();
    assert!(text.starts_with("system,metric,value\nthree_state,"));
    assert!(text.contains("\nchain,max,"));
}

#[test]
fn not_converged_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "lz.json",
        r#"{"kind": "propagate", "config": {"t_max": 3, "extend_window": false},
            "params": {"model": {"type": "diabatic", "slopes": [1, -1], "couplings": [[0, 0.5], [0.5, 0]]}, "initial_level": 1}}"#,
    );
    let o = mlz().arg("run").arg(&p).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    let j = stdout_json(&o);
    assert_eq!(j["error"], "not_converged");
    assert_eq!(j["point"], "from=1");
    assert!(!dir.path().join("propagate.csv").exists());
}

#[test]
fn lz_matrix_matches_formula() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlz().arg("run").arg(scenarios().join("lz_matrix.json")).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(dir.path().join("lz_matrix.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "from,to,P");
    assert_eq!(lines.len(), 5);
    // survival exp(-2π g²/|b1 − b2|) with g = 0.3
    let survive = (-2.0 * std::f64::consts::PI * 0.09 / 2.0f64).exp();
    let p11: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((p11 - survive).abs() < 1e-5, "{p11} vs {survive}");
}

#[test]
fn bad_env_tolerance_is_a_validation_error() {
    let o = mlz().arg("validate").arg(scenarios().join("four_state_phase.json")).env("MLZ_DEFAULT_TOL", "tight").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["errors"][0]["field"], "MLZ_DEFAULT_TOL");
}
