//! End-to-end runs of the binary.

use std::path::Path;
use std::process::{Command, Output};

fn degobs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degobs")).args(args).output().expect("binary runs")
}

fn body(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let data: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rd = csv::Reader::from_reader(data.as_bytes());
    rd.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn laplacian_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = degobs(&["eig", "--alpha", "0", "--n-max", "3", "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = body(&dir.path().join("eig.csv"));
    assert_eq!(rows.len(), 3);
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    for (k, row) in rows.iter().enumerate() {
        let j = (k + 1) as f64;
        let lambda: f64 = row[2].parse().unwrap();
        assert!((lambda - j * j * pi2).abs() <= 1e-10 * j * j * pi2);
        assert_eq!(row[4], "bessel");
    }
    let text = std::fs::read_to_string(dir.path().join("eig.csv")).unwrap();
    let mut header = text.lines().take(3);
    assert!(header.next().unwrap().starts_with("# degobs "));
    assert!(header.next().unwrap().starts_with("# config "));
    assert!(header.next().unwrap().starts_with("# checks: "));
}

#[test]
fn empty_cut_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = degobs(&["control", "--n-max", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    let err = String::from_utf8(run.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=invalid_config category=validation message=\""));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn malformed_flags_are_rejected() {
    for args in [
        ["eig", "--window", "0.8,0.2"],
        ["eig", "--method", "spline"],
        ["heat-obs", "--measurable-set", "0.1,0.3;0.2,0.4"],
        ["interp", "--samples", "5"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--n-max", "2", "--alpha", "0", "--out", dir.path().to_str().unwrap()]);
        let run = degobs(&full);
        assert_eq!(run.status.code(), Some(1), "{args:?}");
        assert_eq!(std::fs::read_dir(dir.path()).map(|d| d.count()).unwrap_or(0), 0, "{args:?}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nalpha = 0.5\nn_max = 2\nseed = 9\n").unwrap();
    let run = degobs(&["eig", "--config", cfg.to_str().unwrap(), "--n-max", "4", "--print-config"]);
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("alpha = 0.5\n"));
    assert!(text.contains("n_max = 4\n"));
    assert!(text.contains("seed = 9\n"));
    assert!(text.contains("bits = auto\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let run = degobs(&["heat-obs", "--alpha", "0,1", "--n-max", "4", "--samples", "10", "--out", d.path().to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let x = std::fs::read(a.path().join("heat.csv")).unwrap();
    let y = std::fs::read(b.path().join("heat.csv")).unwrap();
    assert_eq!(x, y);
    assert_eq!(body(&a.path().join("heat.csv")).len(), 6);
}

#[test]
fn small_control_grid() {
    let dir = tempfile::tempdir().unwrap();
    let run =
        degobs(&["control", "--alpha", "0.5", "--n-max", "2", "--horizon", "1", "--samples", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = body(&dir.path().join("control.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let terminal: f64 = r[6].parse().unwrap();
        let ratio: f64 = r[5].parse().unwrap();
        assert!(terminal < 1e-6 && ratio <= 1.0);
    }
}

#[test]
fn alpha_cap_override_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let rejected = degobs(&["eig", "--alpha", "1.97", "--n-max", "2", "--out", out]);
    assert_eq!(rejected.status.code(), Some(1));
    let run = degobs(&["eig", "--alpha", "1.97", "--alpha-cap", "1.98", "--n-max", "2", "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8(run.stderr).unwrap().starts_with("warning: alpha cap raised"));
}
