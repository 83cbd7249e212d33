use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn driftlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .arg("--workdir")
        .arg(dir)
        .args(args)
        .env_remove("DRIFTLAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn meta(csv: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    csv.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

const DRIFT_CONFIG: &str = r#"{"mu": "linear", "k": 1, "n": 1, "modes": 30, "t_frac": 0.5,
  "steps": 200, "eps": [0.0, 1e-3, 2e-3]}"#;

#[test]
fn coeffs_on_linear_dipole() {
    let dir = tempfile::tempdir().unwrap();
    let o = driftlab(dir.path(), &["coeffs", "--mu", "linear", "--K", "1", "--n", "1", "--out", "c.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(dir.path(), "c.json");
    let a = v["result"]["report"]["A"][0].as_f64().unwrap();
    assert!((a - 1.0).abs() < 1e-6, "A = {a}");
    let sha = v["provenance"]["config_sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
}

#[test]
fn drift_csv_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.json"), DRIFT_CONFIG).unwrap();
    let o = driftlab(dir.path(), &["drift", "--config", "d.json", "--out", "a.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .arg("--workdir")
        .arg(dir.path())
        .args(["drift", "--config", "d.json", "--out", "b.csv"])
        .env("DRIFTLAB_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    assert!(meta(&text, "config_sha256").is_some_and(|s| s.len() == 64));
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rd.records().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][1], "0.0", "ε = 0 gives no drift");
    for r in &rows[1..] {
        let (r_eps, q): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((r_eps / q - 1.0).abs() < 1e-3, "r = {r_eps}, Q = {q}");
    }
}

#[test]
fn ibp_check_passes_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = driftlab(dir.path(), &["ibp-check", "--out", "i.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(dir.path(), "i.json");
    assert!(v["result"]["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["result"]["pass"], Value::Bool(true));
}

#[test]
fn ode_demo_ratio_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = driftlab(dir.path(), &["ode-demo", "--out", "o.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
    let ratio: f64 = meta(&text, "ratio").unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");
    assert_eq!(meta(&text, "a1K").as_deref(), Some("7.0"));
}

#[test]
fn design_mu_first_order_minus() {
    let dir = tempfile::tempdir().unwrap();
    let o = driftlab(
        dir.path(),
        &["design-mu", "--K", "2", "--n", "1", "--sign", "-", "--out", "mu.json", "--report", "r.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = driftlab(dir.path(), &["coeffs", "--mu", "mu.json", "--K", "2", "--n", "1", "--modes", "4000", "--out", "c.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = read_json(dir.path(), "c.json")["result"]["report"]["A"][0].as_f64().unwrap();
    assert!((a + 1.0).abs() < 1e-6, "A = {a}");
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = DRIFT_CONFIG.replace("\"k\": 1", "\"k\": 1, \"bogus\": true");
    std::fs::write(dir.path().join("d.json"), bad).unwrap();
    let o = driftlab(dir.path(), &["drift", "--config", "d.json", "--out", "d.csv"]);
    assert_eq!(code(&o), 1);
    assert!(!dir.path().join("d.csv").exists());

    let o = driftlab(dir.path(), &["coeffs", "--mu", "missing.json", "--K", "1", "--n", "1", "--out", "c.json"]);
    assert_eq!(code(&o), 1);
    let o = driftlab(dir.path(), &["coeffs", "--K", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bad_worker_env_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .arg("--workdir")
        .arg(dir.path())
        .args(["coeffs", "--mu", "linear", "--K", "1", "--n", "1", "--out", "c.json"])
        .env("DRIFTLAB_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn failed_hypotheses_exit_two() {
    // For the linear dipole the first coefficient in direction 2 vanishes:
    // coeffs reports it, drift refuses to run.
    let dir = tempfile::tempdir().unwrap();
    let o = driftlab(dir.path(), &["coeffs", "--mu", "linear", "--K", "2", "--n", "1", "--out", "c.json"]);
    assert_eq!(code(&o), 0);
    let v = read_json(dir.path(), "c.json");
    assert_eq!(v["result"]["hypotheses"]["leading_nonzero"], Value::Bool(false));

    let cfg = DRIFT_CONFIG.replace("\"k\": 1", "\"k\": 2").replace("\"t_frac\": 0.5", "\"horizon\": 0.001");
    std::fs::write(dir.path().join("d.json"), cfg).unwrap();
    let o = driftlab(dir.path(), &["drift", "--config", "d.json", "--out", "d.csv"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unresolved_series_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("narrow.json"),
        r#"{"kind": "bumps", "bumps": [{"center": 0.3, "half_width": 0.01, "amplitude": 1.0}]}"#,
    )
    .unwrap();
    let o = driftlab(dir.path(), &["coeffs", "--mu", "narrow.json", "--K", "2", "--n", "2", "--modes", "100", "--out", "c.json"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&driftlab(dir.path(), &["--help"])), 0);
    assert_eq!(code(&driftlab(dir.path(), &["--version"])), 0);
}
