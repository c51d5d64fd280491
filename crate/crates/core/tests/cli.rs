use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_token-auction");

const BASE: &str = r#"
n = 2
T = 2
beta = 0.9

[distribution]
kind = "uniform"
low = 0.0
high = 1.0

[policy]
tau = [0.0, 0.0]
sigma = [-1.0, -1.0]

[mc]
paths = 20000
seed = 5
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn invoke(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn validate_reports_field_level_problems() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), BASE);
    let out = invoke(&["validate"], &ok, dir.path());
    assert_eq!(out.status.code(), Some(0));

    let bad = write_config(dir.path(), &BASE.replace("sigma = [-1.0, -1.0]", "sigma = [-1.5]"));
    let out = invoke(&["validate"], &bad, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("policy.sigma: length 1 does not match T = 2"), "{err}");
    assert!(err.contains("policy.sigma[0]: sigma below -1 (got -1.5)"), "{err}");

    let unknown = write_config(dir.path(), &format!("{BASE}\nextra = 1\n"));
    assert_eq!(invoke(&["solve"], &unknown, dir.path()).status.code(), Some(2));
}

#[test]
fn solve_single_period_reports_k() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE.replace("T = 2", "T = 1").replace("[0.0, 0.0]", "[0.0]").replace("[-1.0, -1.0]", "[-1.0]");
    let cfg = write_config(dir.path(), &text);
    let out = invoke(&["solve"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&dir.path().join("solve.csv"));
    assert_eq!(table.len(), 1);
    let cap: f64 = table[0][1].parse().unwrap();
    assert!((cap - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn burn_demo_checks_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = invoke(&["burn-demo"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&dir.path().join("burn.csv"));
    assert_eq!(table.len(), 20_000);
    let mean_r1: f64 = table.iter().map(|r| r[2].parse::<f64>().unwrap()).sum::<f64>() / table.len() as f64;
    assert!((mean_r1 - 0.633_333).abs() < 0.01, "{mean_r1}");
    assert!(table.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn simulate_writes_provenance_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("paths = 20000", "paths = 50"));
    let out = invoke(&["simulate", "--seed", "99"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("trace_dollars.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# generated_unix="));
    let provenance = lines.next().unwrap();
    assert!(provenance.starts_with("# config_hash=sha256:") && provenance.contains("seed=99"), "{provenance}");
    assert_eq!(lines.next().unwrap(), "path_id,t,B,p,S,M,A,revenue,bidder_payoff_mean");
    // dollar rows carry no token-market state
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[3], "NaN");
    assert_eq!(text.lines().count(), 3 + 50 * 2);

    let out = invoke(&["simulate", "--format", "json"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace_tokens.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 100);
    assert_eq!(json["columns"][2], "B");
}

#[test]
fn compare_formats_rejects_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE.replace("kind = \"uniform\"\nlow = 0.0\nhigh = 1.0", "kind = \"discrete\"\natoms = [[1.0, 0.5], [2.0, 0.5]]");
    let cfg = write_config(dir.path(), &text);
    assert_eq!(invoke(&["compare-formats"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn extension_sweep_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE.replace("low = 0.0\nhigh = 1.0", "low = 1.0\nhigh = 2.0") + "\n[extension]\nc_grid = [0.0, 0.5, 1.0, 2.0, 5.0]\n";
    let cfg = write_config(dir.path(), &text);
    let out = invoke(&["extension"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&dir.path().join("extension.csv"));
    let dollars: Vec<f64> = table.iter().map(|r| r[1].parse().unwrap()).collect();
    let tokens: Vec<f64> = table.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(dollars.windows(2).all(|w| w[1] >= w[0]));
    assert!(tokens.windows(2).all(|w| w[1] == w[0]));
    assert!(tokens[0] > dollars[0] && dollars[4] > tokens[4]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("c* = 0.5"));
}

#[test]
fn missing_config_is_a_config_error() {
    let out = Command::new(BIN).arg("solve").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(&["validate"], &dir.path().join("absent.toml"), dir.path());
    assert_eq!(out.status.code(), Some(2));
}
