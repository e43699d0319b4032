use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn qellip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qellip")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn mirror_config() -> String {
    std::fs::read_to_string(fixture("mirror.toml")).unwrap()
}

#[test]
fn simulate_mirror_sweep() {
    let cfg = fixture("mirror.toml");
    let a = stdout(&qellip(&["simulate", "--config", cfg.to_str().unwrap()]));
    let b = stdout(&qellip(&["simulate", "--config", cfg.to_str().unwrap()]));
    assert_eq!(a, b);
    assert!(!a.contains('\r'));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "theta1_deg,theta2_deg,dwell_s,counts");
    assert_eq!(lines.len(), 14);
    assert!(lines[1].starts_with("0.000000,45.000000,1.000000,"));
    assert_eq!(a, std::fs::read_to_string(fixture("mirror_seed7.csv")).unwrap());

    let other = stdout(&qellip(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "8"]));
    assert_ne!(a, other);
}

#[test]
fn simulate_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("counts.csv");
    let o = qellip(&["simulate", "--config", fixture("mirror.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).is_empty());
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(fixture("mirror_seed7.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("dwell.toml", mirror_config().replace("dwell_s = 1.0", "dwell_s = 0.0"), "dwell_s"),
        ("step.toml", mirror_config().replace("step = 15.0", "step = 0.0"), "step"),
        ("syntax.toml", mirror_config().replace("eta1 = 0.5", "eta1 = = 0.5"), "line"),
        ("missing.toml", mirror_config().replace("[scale]\npairs_per_s = 1e4\n", ""), "scale"),
    ];
    for (name, text, needle) in cases {
        let path = write(dir.path(), name, &text);
        for sub in ["simulate", "fringe"] {
            let o = qellip(&[sub, "--config", &path]);
            assert_eq!(o.status.code(), Some(2), "{name} {sub}");
            let err = String::from_utf8_lossy(&o.stderr);
            assert!(err.contains(needle), "{name}: {err}");
        }
    }
    let o = qellip(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_three_angle_fixture() {
    let o = qellip(&["estimate", "--input", fixture("fixture_rates.csv").to_str().unwrap()]);
    let r = json(&o);
    assert_eq!(o.status.code(), Some(0));
    assert!((r["psi_deg"].as_f64().unwrap() - 63.435).abs() < 5e-4);
    assert!((r["delta_deg"].as_f64().unwrap() - 60.000).abs() < 5e-4);
    assert!((r["C_hat"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert_eq!(r["method"], "three-angle");
    assert_eq!(r["residuals"].as_array().unwrap().len(), 3);
    assert!(r["version"].as_str().unwrap().starts_with("qellip "));
    let cov = r["cov"].as_array().unwrap();
    assert_eq!(cov.len(), 3);
    for (i, row) in cov.iter().enumerate() {
        for (j, x) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(*x, cov[j][i]);
        }
    }
}

fn noiseless_mirror_csv(grid: &[f64]) -> String {
    let mut s = String::from("theta1_deg,theta2_deg,dwell_s,counts\n");
    for &t in grid {
        let n = 1e4 * (1.0 + (2.0 * t.to_radians()).sin()) / 2.0;
        s.push_str(&format!("{t},45,1,{n}\n"));
    }
    s
}

#[test]
fn estimate_noiseless_mirror_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let grid: Vec<f64> = (0..13).map(|i| i as f64 * 15.0).collect();
    let input = write(dir.path(), "m.csv", &noiseless_mirror_csv(&grid));
    for method in ["three-angle", "fit"] {
        let o = qellip(&["estimate", "--input", &input, "--method", method]);
        let r = json(&o);
        assert_eq!(o.status.code(), Some(0), "{method}");
        assert!((r["psi_deg"].as_f64().unwrap() - 45.0).abs() < 1e-6, "{method} {r}");
        assert!(r["delta_deg"].as_f64().unwrap().abs() < 1e-6, "{method} {r}");
        assert_eq!(r["method"], method);
    }
}

#[test]
fn estimate_is_row_order_independent() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("oxide_si_seed42.csv")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    let forward = write(dir.path(), "a.csv", &text);
    lines.reverse();
    lines.swap(1, 5);
    let shuffled = write(dir.path(), "b.csv", &format!("{header}\n{}\n", lines.join("\n")));
    let cfg = fixture("oxide_si.toml");
    for method in ["three-angle", "fit"] {
        let a = qellip(&["estimate", "--input", &forward, "--config", cfg.to_str().unwrap(), "--method", method]);
        let b = qellip(&["estimate", "--input", &shuffled, "--config", cfg.to_str().unwrap(), "--method", method]);
        assert_eq!(stdout(&a), stdout(&b), "{method}");
    }
}

#[test]
fn estimate_reports_ground_truth_and_config() {
    let cfg = fixture("oxide_si.toml");
    let o = qellip(&["estimate", "--input", fixture("oxide_si_seed42.csv").to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--method", "fit"]);
    let r = json(&o);
    assert!((r["ground_truth"]["psi_deg"].as_f64().unwrap() - 37.4262967).abs() < 1e-6);
    assert_eq!(r["config"]["sample"]["kind"], "stack");
    assert_eq!(r["detector"]["visibility"].as_f64(), Some(0.98));
    let psi = r["psi_deg"].as_f64().unwrap();
    let se = r["std_err"]["psi_deg"].as_f64().unwrap();
    assert!((psi - 37.4262967).abs() < 5.0 * se);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "missing.csv", "theta1_deg,theta2_deg,dwell_s,counts\n0,45,1,10\n90,45,1,10\n");
    let o = qellip(&["estimate", "--input", &missing]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("45"));

    let header = write(dir.path(), "header.csv", "a,b,c,d\n0,45,1,10\n");
    assert_eq!(qellip(&["estimate", "--input", &header]).status.code(), Some(3));
    let bad = write(dir.path(), "bad.csv", "theta1_deg,theta2_deg,dwell_s,counts\n0,45,1,ten\n");
    assert_eq!(qellip(&["estimate", "--input", &bad]).status.code(), Some(3));
    assert_eq!(qellip(&["estimate", "--input", "/nonexistent.csv"]).status.code(), Some(3));
}

#[test]
fn fit_non_convergence_exits_4_with_best_iterate() {
    let input = fixture("oxide_si_seed42.csv");
    let cfg = fixture("oxide_si.toml");
    let o = qellip(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--method",
        "fit",
        "--max-iterations",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(4));
    let r = json(&o);
    assert_eq!(r["converged"], false);
    assert!(r["psi_deg"].as_f64().unwrap().is_finite());
    assert_eq!(r["residuals"].as_array().unwrap().len(), 8);
}

#[test]
fn fringe_mirror_shape() {
    let text = stdout(&qellip(&["fringe", "--config", fixture("mirror.toml").to_str().unwrap()]));
    assert_eq!(text, std::fs::read_to_string(fixture("mirror_fringe.csv")).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta1_deg,expected_rate"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    for &(t, rate) in &rows {
        let shape = 1.0 + (2.0 * f64::to_radians(t)).sin();
        assert!((rate - 1250.0 * shape).abs() < 1e-6, "{t} {rate}");
    }
    let min = rows.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(min.0, 135.0);
    assert!(min.1.abs() < 1e-6);
}

#[test]
fn fringe_without_interference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mirror_config()
        .replace("visibility = 1.0", "visibility = 0.0")
        .replace("step = 15.0", "step = 5.0");
    let path = write(dir.path(), "v0.toml", &cfg);
    let text = stdout(&qellip(&["fringe", "--config", &path]));
    let rates: Vec<f64> = text.lines().skip(1).map(|l| l.split_once(',').unwrap().1.parse().unwrap()).collect();
    let (lo, hi) = rates.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    // β = 1, θ₂ = 45°: direct terms sum to a constant C/2
    assert!(((hi - lo) / (hi + lo)) < 1.0);
    assert!(rates.iter().all(|r| (r - 1250.0).abs() < 1e-6));
}

#[test]
fn baseline_comparisons() {
    let o = qellip(&["baseline", "--config", fixture("drift_mirror.toml").to_str().unwrap(), "--noiseless"]);
    let r = json(&o);
    assert!((r["classical_psi_deg"].as_f64().unwrap() - 44.433).abs() < 1e-3);
    assert!((r["quantum_psi_deg"].as_f64().unwrap() - 45.0).abs() < 1e-6);
    assert_eq!(r["true_psi_deg"].as_f64(), Some(45.0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(fixture("drift_mirror.toml"))
        .unwrap()
        .replace("gain_drift = 1.02", "gain_drift = 1.0")
        .replace("kind = \"mirror\"", "kind = \"direct\"\npsi_deg = 30.0\ndelta_deg = 70.0");
    let path = write(dir.path(), "ideal.toml", &cfg);
    let r = json(&qellip(&["baseline", "--config", &path, "--noiseless"]));
    let t = r["true_psi_deg"].as_f64().unwrap();
    assert!((t - 30.0).abs() < 1e-6);
    assert!((r["classical_psi_deg"].as_f64().unwrap() - t).abs() < 1e-6);
    assert!((r["quantum_psi_deg"].as_f64().unwrap() - t).abs() < 1e-6);

    let no_instrument = qellip(&["baseline", "--config", fixture("mirror.toml").to_str().unwrap()]);
    assert_eq!(no_instrument.status.code(), Some(2));
}
