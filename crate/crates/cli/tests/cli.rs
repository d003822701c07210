use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qtransition::analytic::{initial_state, AnalyticState};
use qtransition::{density, Grid1D, Provenance, SimParams, TwoGaussianConfig};
use serde_json::Value;
use tempfile::TempDir;

const SMALL: [&str; 6] = ["--grid_points", "801", "--grid_extent_over_sigma", "40", "--t_final_units", "3"];

fn qtransition(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtransition"))
        .args(args)
        .current_dir(cwd)
        .env_remove("QTRANSITION_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Header plus columns parsed as floats.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for line in lines {
        for (c, v) in cols.iter_mut().zip(line.split(',')) {
            c.push(v.parse().unwrap());
        }
    }
    (header, cols)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, cols) = read_csv(path);
    let i = header.iter().position(|h| h == name).unwrap();
    cols[i].clone()
}

fn raw_column(path: &Path, index: usize) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(index).unwrap().to_string())
        .collect()
}

fn manifest_without_timestamp(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("created_unix");
    v
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn peak(a: &[f64]) -> f64 {
    a.iter().cloned().fold(0.0, f64::max)
}

#[test]
fn default_unit_quantumness_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    ok(&qtransition(&["simulate", "--output_dir", "out"], dir.path()));
    let csv = dir.path().join("out/eps_1/snapshot_t20.csv");
    let (header, _) = read_csv(&csv);
    assert_eq!(header, ["x", "rho_sim", "rho_analytic", "re_psi", "im_psi"]);
    let sim = column(&csv, "rho_sim");
    let exact = column(&csv, "rho_analytic");
    assert_eq!(sim.len(), 4096);
    assert!(max_abs_diff(&sim, &exact) <= 0.02 * peak(&exact));

    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/eps_1/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["kind"], "simulate");
    assert!(m["scheme"].as_str().unwrap().contains("rk4"));
    assert_eq!(m["config"]["grid_points"], 4096);
    assert!(m["run"]["steps_taken"].as_u64().unwrap() > 0);
    assert!(m["run"]["norm_drift"].as_f64().unwrap() < 1e-6);
    assert_eq!(m["snapshots"][0]["reference"], "analytic");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut a = vec!["simulate", "--epsilon", "0.2", "--snapshot_times", "1", "--output_dir", "a"];
    a.extend(SMALL);
    ok(&qtransition(&a, dir.path()));
    let mut b = a.clone();
    b[6] = "b";
    ok(&qtransition(&b, dir.path()));
    for file in ["snapshot_t1.csv", "snapshot_t3.csv"] {
        let x = fs::read(dir.path().join("a/eps_0.2").join(file)).unwrap();
        let y = fs::read(dir.path().join("b/eps_0.2").join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
    assert_eq!(
        manifest_without_timestamp(&dir.path().join("a/eps_0.2/manifest.json")),
        manifest_without_timestamp(&dir.path().join("b/eps_0.2/manifest.json"))
    );
}

#[test]
fn manifest_replays_the_run() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["simulate", "--epsilon", "0.6", "--d_over_sigma", "2.5", "--dt_safety", "0.4", "--output_dir", "first"];
    args.extend(SMALL);
    ok(&qtransition(&args, dir.path()));
    ok(&qtransition(
        &["simulate", "--replay", "first/eps_0.6/manifest.json", "--output_dir", "again"],
        dir.path(),
    ));
    let x = fs::read(dir.path().join("first/eps_0.6/snapshot_t3.csv")).unwrap();
    let y = fs::read(dir.path().join("again/eps_0.6/snapshot_t3.csv")).unwrap();
    assert!(x == y);
    assert_eq!(
        manifest_without_timestamp(&dir.path().join("first/eps_0.6/manifest.json")),
        manifest_without_timestamp(&dir.path().join("again/eps_0.6/manifest.json"))
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("exp.cfg"),
        "# small run\nepsilon = 0.5\ngrid_points = 801\ngrid_extent_over_sigma = 40\nt_final_units = 1\n",
    )
    .unwrap();
    ok(&qtransition(
        &["simulate", "--config", "exp.cfg", "--t_final_units", "0.5", "--output_dir", "out"],
        dir.path(),
    ));
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/eps_0.5/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["t_final_units"], 0.5);
    assert_eq!(m["config"]["grid_points"], 801);

    fs::write(dir.path().join("bad.cfg"), "epsilon = 0.5\n\ngrid_points: 12\n").unwrap();
    let out = qtransition(&["simulate", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn output_root_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("env-root");
    let out = Command::new(env!("CARGO_BIN_EXE_qtransition"))
        .args(["analytic", "--epsilon", "1", "--t_final_units", "1"])
        .current_dir(dir.path())
        .env("QTRANSITION_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    ok(&out);
    assert!(root.join("eps_1/analytic_t1.csv").exists());
    assert!(root.join("analytic_manifest.json").exists());
}

#[test]
fn coarse_grid_is_rejected_before_integration() {
    let dir = TempDir::new().unwrap();
    let out = qtransition(&["simulate", "--grid_points", "5", "--output_dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grid too narrow"));
    assert!(!dir.path().join("out/eps_1").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("taken"), "").unwrap();
    let mut args = vec!["simulate", "--output_dir", "taken"];
    args.extend(SMALL);
    assert_eq!(qtransition(&args, dir.path()).status.code(), Some(4));
}

#[test]
fn classical_run_keeps_the_initial_density() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["simulate", "--epsilon", "0", "--output_dir", "out"];
    args.extend(SMALL);
    ok(&qtransition(&args, dir.path()));
    let csv = dir.path().join("out/eps_0/snapshot_t3.csv");
    let grid = Grid1D::symmetric(40.0, 801).unwrap();
    let config = TwoGaussianConfig::new(3.0, 1.0, SimParams::natural(0.0).unwrap()).unwrap();
    let rho0 = density(&initial_state(&config, &grid).unwrap(), 0.0, 0.0, Provenance::Initial);
    let reference = column(&csv, "rho_analytic");
    assert!(max_abs_diff(&reference, rho0.rho()) <= 1e-15 * rho0.peak());
    assert!(max_abs_diff(&column(&csv, "rho_sim"), rho0.rho()) <= 0.02 * rho0.peak());
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/eps_0/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["snapshots"][0]["reference"], "initial");
    assert_eq!(m["run"]["singular_regime"], true);
}

#[test]
fn sweep_deduplicates_and_aggregates() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["sweep", "--epsilon", "1,0,0.2,1", "--output_dir", "out"];
    args.extend(SMALL);
    let out = qtransition(&args, dir.path());
    ok(&out);
    assert!(stderr(&out).contains("duplicate"));
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/sweep_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schema_version"], 1);
    let runs = m["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    assert_eq!(m["duplicates_removed"], serde_json::json!([1.0]));
    for run in runs {
        assert_eq!(run["status"], "ok");
        for csv in run["csv"].as_array().unwrap() {
            assert!(dir.path().join("out").join(csv.as_str().unwrap()).exists());
        }
    }
}

#[test]
fn single_element_sweep_equals_simulate() {
    let dir = TempDir::new().unwrap();
    let mut a = vec!["sweep", "--epsilon", "0.05", "--output_dir", "sweep"];
    a.extend(SMALL);
    ok(&qtransition(&a, dir.path()));
    let mut b = vec!["simulate", "--epsilon", "0.05", "--output_dir", "single"];
    b.extend(SMALL);
    ok(&qtransition(&b, dir.path()));
    let x = fs::read(dir.path().join("sweep/eps_0.05/snapshot_t3.csv")).unwrap();
    let y = fs::read(dir.path().join("single/eps_0.05/snapshot_t3.csv")).unwrap();
    assert!(x == y);
    assert!(dir.path().join("sweep/sweep_manifest.json").exists());
}

#[test]
fn analytic_scaling_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    ok(&qtransition(
        &["analytic", "--epsilon", "0.2", "--t_final_units", "20", "--output_dir", "a"],
        dir.path(),
    ));
    let t = format!("{}", 20.0 * 0.2f64.sqrt());
    ok(&qtransition(
        &["analytic", "--epsilon", "1", "--t_final_units", &t, "--output_dir", "b"],
        dir.path(),
    ));
    let a = raw_column(&dir.path().join("a/eps_0.2/analytic_t20.csv"), 1);
    let b = raw_column(&dir.path().join(format!("b/eps_1/analytic_t{t}.csv")), 1);
    assert_eq!(a.len(), 4096);
    assert!(a == b);
}

#[test]
fn analytic_at_time_zero_is_the_initial_density() {
    let dir = TempDir::new().unwrap();
    ok(&qtransition(
        &["analytic", "--epsilon", "0.3", "--t_final_units", "0", "--output_dir", "out"],
        dir.path(),
    ));
    let grid = Grid1D::symmetric(80.0, 4096).unwrap();
    let config = TwoGaussianConfig::new(3.0, 1.0, SimParams::natural(0.3).unwrap()).unwrap();
    let rho0 = density(&initial_state(&config, &grid).unwrap(), 0.0, 0.3, Provenance::Initial);
    let rho = column(&dir.path().join("out/eps_0.3/analytic_t0.csv"), "rho_analytic");
    assert!(max_abs_diff(&rho, rho0.rho()) <= 1e-14 * rho0.peak());
}

#[test]
fn coincident_packets_give_a_single_gaussian() {
    let dir = TempDir::new().unwrap();
    ok(&qtransition(
        &["analytic", "--epsilon", "1", "--d_over_sigma", "0", "--output_dir", "out"],
        dir.path(),
    ));
    let csv = dir.path().join("out/eps_1/analytic_t20.csv");
    let x = column(&csv, "x");
    let rho = column(&csv, "rho_analytic");
    // sigma_t^2 = 1 + (t/2)^2
    let s2 = 1.0 + 100.0;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * s2).sqrt();
    for (xi, r) in x.iter().zip(&rho) {
        let expected = norm * (-xi * xi / (2.0 * s2)).exp();
        assert!((r - expected).abs() <= 1e-12 * norm, "x = {xi}");
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/analytic_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["files"][0]["visibility"], 0.0);
}

fn write_field(path: &Path, x: &[f64], psi: &[(f64, f64)]) {
    let mut text = String::from("x,re_psi,im_psi\n");
    for (xi, (re, im)) in x.iter().zip(psi) {
        text.push_str(&format!("{xi:.16e},{re:.16e},{im:.16e}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn decompose_plane_wave() {
    let dir = TempDir::new().unwrap();
    let k = 1.7;
    let x: Vec<f64> = (0..201).map(|i| i as f64 * 0.05).collect();
    let psi: Vec<(f64, f64)> = x.iter().map(|&x| ((k * x).cos(), (k * x).sin())).collect();
    write_field(&dir.path().join("plane.csv"), &x, &psi);
    ok(&qtransition(&["decompose", "plane.csv", "--hbar", "2", "--output_dir", "out"], dir.path()));
    let csv = dir.path().join("out/plane_polar.csv");
    let (header, _) = read_csv(&csv);
    assert_eq!(header, ["x", "amplitude", "action", "quantum_potential", "current", "velocity"]);
    assert!(column(&csv, "amplitude").iter().all(|a| (a - 1.0).abs() < 1e-14));
    assert!(column(&csv, "quantum_potential").iter().all(|u| u.abs() < 1e-9));
    let s = column(&csv, "action");
    for w in s.windows(2) {
        assert!((w[1] - w[0] - 2.0 * k * 0.05).abs() < 1e-12);
    }
    let v = column(&csv, "velocity");
    assert!(v[1..v.len() - 1].iter().all(|v| (v - 2.0 * k).abs() < 1e-10));
}

#[test]
fn decompose_quantum_potential_matches_finite_differences() {
    let dir = TempDir::new().unwrap();
    let grid = Grid1D::symmetric(30.0, 1201).unwrap();
    let config = TwoGaussianConfig::new(3.0, 1.0, SimParams::natural(1.0).unwrap()).unwrap();
    let state = AnalyticState::at(&config, 5.0).unwrap();
    let x = grid.points();
    let psi: Vec<(f64, f64)> = x.iter().map(|&x| state.psi(x)).map(|z| (z.re, z.im)).collect();
    write_field(&dir.path().join("t5.csv"), &x, &psi);
    ok(&qtransition(&["decompose", "t5.csv", "-o", "polar.csv"], dir.path()));

    let u = column(&dir.path().join("polar.csv"), "quantum_potential");
    let amp = |x: f64| state.psi(x).norm();
    let h = grid.dx();
    let top = x.iter().map(|&x| amp(x)).fold(0.0, f64::max);
    for (i, &xi) in x.iter().enumerate().skip(1).take(x.len() - 2) {
        if amp(xi) < 1e-3 * top {
            continue;
        }
        let lap = (amp(xi + h) - 2.0 * amp(xi) + amp(xi - h)) / (h * h);
        let oracle = -0.5 * lap / amp(xi);
        assert!((u[i] - oracle).abs() < 1e-6, "x = {xi}: {} vs {oracle}", u[i]);
    }
}

#[test]
fn decompose_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = qtransition(&["decompose", "empty.csv", "--output_dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));

    fs::write(dir.path().join("zero.csv"), "x,re_psi,im_psi\n0,0,0\n1,0,0\n2,0,0\n").unwrap();
    let out = qtransition(&["decompose", "zero.csv", "--output_dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.path().join("bad.csv"), "x,re_psi,im_psi\n0,1,0\n1,1,0\n2,one,0\n").unwrap();
    let out = qtransition(&["decompose", "bad.csv", "--output_dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let out = qtransition(&["decompose", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn convergence_writes_table() {
    let dir = TempDir::new().unwrap();
    ok(&qtransition(
        &[
            "convergence",
            "--epsilon",
            "1",
            "--grid_points",
            "257",
            "--grid_extent_over_sigma",
            "40",
            "--t_final_units",
            "2",
            "--output_dir",
            "out",
        ],
        dir.path(),
    ));
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/convergence.json")).unwrap()).unwrap();
    let orders = m["table"]["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 2);
    assert!(orders.iter().all(|p| (p.as_f64().unwrap() - 2.0).abs() < 0.3));
    assert_eq!(column(&dir.path().join("out/convergence.csv"), "dx").len(), 3);

    let out = qtransition(&["convergence", "--epsilon", "0.2,1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
