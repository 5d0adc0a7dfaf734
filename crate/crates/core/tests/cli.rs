use std::path::Path;
use std::process::{Command, Output};

fn fracdeg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdeg"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env("FRACDEG_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn manifest(out: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join("manifest.json")).expect("manifest written");
    serde_json::from_str(&text).expect("manifest is JSON")
}

#[test]
fn harmonic_run_writes_solution_sidecar_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracdeg(&["harmonic", "--n", "200", "--s", "0.6"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("harmonic.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,u"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("harmonic.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "harmonic");
    assert_eq!(meta["n"], 200);
    let m = manifest(dir.path());
    assert_eq!(m["config"]["s"], 0.6);
    assert_eq!(m["config"]["command"], "harmonic");
    assert_eq!(m["passed"], true);
}

#[test]
fn identical_configs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["solve", "--n", "60", "--datum", "two_solutions", "--f", "constant:1"];
    assert!(fracdeg(&args, a.path()).status.success());
    assert!(fracdeg(&args, b.path()).status.success());
    let read = |d: &Path| std::fs::read(d.join("solution.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"s": 0.9, "n": 50, "datum": {"preset": "constant", "value": 3.0}}"#).unwrap();
    let out = fracdeg(&["harmonic", "--config", cfg.to_str().unwrap(), "--n", "40"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["config"]["s"], 0.9);
    assert_eq!(m["config"]["n"], 40);
    let csv = std::fs::read_to_string(dir.path().join("harmonic.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let u: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((u - 3.0).abs() < 1e-9, "{line}");
    }
}

#[test]
fn invalid_order_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracdeg(&["harmonic", "--s", "1.2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s must lie in (0,1)"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"s": 0.5, "resolution": 10}"#).unwrap();
    let out = fracdeg(&["harmonic", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolution"));
}

#[test]
fn fast_growing_custom_datum_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"s": 0.4, "datum": {"preset": "custom", "points": [[-2, 1], [2, 1]], "growth_m": 1, "growth_sigma": 0.9}}"#,
    )
    .unwrap();
    let out = fracdeg(&["harmonic", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma"));
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    // a single Newton iteration per stage cannot converge from the linear start
    std::fs::write(&cfg, r#"{"n": 80, "picard_max": 1, "f": {"preset": "constant", "value": 1.0}, "datum": {"preset": "two_solutions"}}"#).unwrap();
    let out = fracdeg(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn extremal_linear_data_reproduce_the_datum() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracdeg(&["extremal", "--n", "100", "--datum", "linear:1,0", "--side", "minimal"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("minimal.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let mut it = line.split(',').map(|v| v.parse::<f64>().unwrap());
        let (x, u) = (it.next().unwrap(), it.next().unwrap());
        assert!((u - x).abs() <= 2e-4, "{line}");
    }
}

#[test]
fn bench_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracdeg(&["bench", "--n", "300"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert!(csv.starts_with("n,s,direct_seconds,fast_seconds,max_rel_diff"));
}
