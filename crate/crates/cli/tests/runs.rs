use std::fs;
use std::path::Path;

use beltrami_cli::config::ExperimentConfig;
use beltrami_cli::sweep::SWEEP_HEADER;
use beltrami_cli::{run, run_sweep, CliError};
use beltrami_core::Mat2;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn laminate(resolution: usize, fraction: f64) -> ExperimentConfig {
    config(&format!(
        r#"
        task = "homogenize"
        resolution = {resolution}
        [domain]
        kind = "periodic_cell"
        [coefficients]
        family = "laminate"
        a = 1.0
        b = 5.0
        fraction = {fraction}
        [homogenize]
        expected = [[{h}, 0.0], [0.0, {a}]]
        "#,
        h = 1.0 / (fraction / 1.0 + (1.0 - fraction) / 5.0),
        a = fraction + 5.0 * (1.0 - fraction),
    ))
}

#[test]
fn convert_zero_pair_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run(&config("task = \"convert\"\n[convert]\nmu = [0.0, 0.0]\nnu = [0.0, 0.0]\n"), dir.path()).unwrap();
    assert!(rec.all_passed);
    let sigma: Mat2 = serde_json::from_value(rec.metrics["sigma"].clone()).unwrap();
    assert!(sigma.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "run.json")).unwrap();
    assert_eq!(json["task"], "convert");
    assert_eq!(json["all_passed"], true);
}

#[test]
fn identity_primary_pair_has_unit_jacobian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"
        task = "primary-pair"
        resolution = 8
        [coefficients]
        family = "constant"
        matrix = [[1.0, 0.0], [0.0, 1.0]]
        "#,
    );
    let rec = run(&cfg, dir.path()).unwrap();
    assert!(rec.all_passed, "{:?}", rec.failed_checks().collect::<Vec<_>>());
    assert!((rec.headline.min_det_du.unwrap() - 1.0).abs() < 1e-10);
    let summary = read(dir.path(), "summary.csv");
    assert_eq!(summary.lines().count(), 2);
    for name in ["vertices_8.csv", "triangles_8.csv", "run.json"] {
        assert!(rec.artifacts.iter().any(|a| a == name), "{name}");
    }
}

#[test]
fn laminate_homogenizes_to_the_layered_means() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run(&laminate(128, 0.5), dir.path()).unwrap();
    let eff = rec.headline.sigma_eff.unwrap();
    assert!(eff.max_abs_diff(&Mat2::diag(5.0 / 3.0, 3.0)) / 3.0 < 0.01);
    let csv = read(dir.path(), "effective.csv");
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 11);
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_sweep(&[], dir.path(), None, None).unwrap();
    assert!(outcome.records.is_empty());
    assert_eq!(read(dir.path(), "sweep.csv"), format!("{SWEEP_HEADER}\n"));
}

#[test]
fn unaligned_laminate_error_decreases_with_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = [32, 64, 128].into_iter().map(|n| laminate(n, 0.3)).collect();
    run_sweep(&runs, dir.path(), None, None).unwrap();
    let csv = read(dir.path(), "sweep.csv");
    let col = SWEEP_HEADER.split(',').position(|c| c == "sigma_eff_error").unwrap();
    let errors: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn random_sweep_keeps_jacobian_positive() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = [1.5, 3.0, 5.0]
        .into_iter()
        .map(|k| {
            config(&format!(
                r#"
                task = "primary-pair"
                resolution = 24
                [coefficients]
                family = "random_piecewise"
                k_max = {k}
                cells = 4
                seed = 11
                "#
            ))
        })
        .collect();
    let outcome = run_sweep(&runs, dir.path(), None, None).unwrap();
    assert!(outcome.all_passed());
    let csv = read(dir.path(), "sweep.csv");
    for line in csv.lines().skip(1) {
        let det: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(det > 0.0, "{line}");
    }
}

#[test]
fn failing_run_is_recorded_and_the_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = laminate(8, 0.5);
    bad.coefficients =
        Some(beltrami_core::coefficients::CoefficientSpec::Constant { matrix: Mat2::new(1.0, 0.0, 0.0, -1.0) });
    let runs = vec![bad, laminate(8, 0.5)];
    let outcome = run_sweep(&runs, dir.path(), None, None).unwrap();
    assert!(outcome.records[0].is_err());
    assert!(outcome.records[1].is_ok());
    let csv = read(dir.path(), "sweep.csv");
    let rows: Vec<_> = csv.lines().skip(1).collect();
    assert!(rows[0].contains(",error,"), "{}", rows[0]);
    assert!(rows[1].contains(",pass,"), "{}", rows[1]);
}

#[test]
fn mixed_tasks_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let other = config("task = \"convert\"\n[convert]\nsigma = [[1.0, 0.0], [0.0, 1.0]]\n");
    let err = run_sweep(&[laminate(8, 0.5), other], dir.path(), None, None).unwrap_err();
    assert!(matches!(err, CliError::Validation { .. }));
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = config(
        r#"
        task = "diagnose"
        resolution = 32
        seed = 3
        [coefficients]
        family = "random_piecewise"
        k_max = 4.0
        cells = 4
        seed = 5
        [diagnose]
        max_level = 3
        "#,
    );
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run(&cfg, a.path()).unwrap();
    run(&cfg, b.path()).unwrap();
    for name in ra.artifacts.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn binary_exit_codes_follow_the_checks() {
    let exe = env!("CARGO_BIN_EXE_beltrami");
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, "task = \"convert\"\n[convert]\nmu = [0.1, 0.0]\nnu = [0.0, 0.2]\n").unwrap();
    let status = std::process::Command::new(exe)
        .args(["convert", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let status = std::process::Command::new(exe)
        .args(["solve", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "task = \"primary-pair\"\nresolution = 8\n").unwrap();
    let out = std::process::Command::new(exe).args(["primary-pair", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coefficients"));
}
