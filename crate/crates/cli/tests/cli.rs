use std::path::Path;
use std::process::{Command, Output};

fn jumpgeo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpgeo"))
        .args(args)
        .current_dir(dir)
        .env_remove("JUMPGEO_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn generate_estimate_metrics_topology() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&jumpgeo(
        &["generate", "--shape", "two-circles", "--n", "128", "--sigma", "0.25", "--seed", "3", "--out", "obs.bin"],
        d,
    ));
    assert!(d.join("obs.bin.truth.json").exists());

    let est = json(&jumpgeo(&["estimate", "--input", "obs.bin", "--l", "4", "--out", "mask.bin"], d));
    assert!(est["selected"].as_u64().unwrap() > 0);

    let m = json(&jumpgeo(&["metrics", "--mask", "mask.bin", "--truth", "obs.bin.truth.json"], d));
    let r = est["params"]["r"].as_f64().unwrap();
    assert!(m["distance"].as_f64().unwrap() <= 2.0 * r + 0.1);

    let same = json(&jumpgeo(&["metrics", "--mask", "mask.bin", "--other", "mask.bin"], d));
    assert_eq!(same["distance"].as_f64(), Some(0.0));

    let t = json(&jumpgeo(&["topology", "--mask", "mask.bin", "--kappa", "0", "--csv", "dgm.csv"], d));
    assert_eq!(t["betti"][0]["degree"], 0);
    let csv = std::fs::read_to_string(d.join("dgm.csv")).unwrap();
    assert!(csv.starts_with("degree,birth,death"));
    assert!(csv.contains("inf"));

    let auto = json(&jumpgeo(&["topology", "--mask", "mask.bin", "--auto-kappa", "--r", "0.1", "--mu", "0.5"], d));
    assert!((auto["kappa"].as_f64().unwrap() - 0.8).abs() < 1e-12);
}

#[test]
fn csv_observations_round_trip_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&jumpgeo(
        &["generate", "--shape", "half-space", "--n", "32", "--sigma", "0", "--format", "csv", "--out", "obs.csv"],
        d,
    ));
    // noiseless file: calibration needs an explicit sigma
    assert_eq!(jumpgeo(&["estimate", "--input", "obs.csv", "--l", "4", "--out", "m.bin"], d).status.code(), Some(2));
    let est = json(&jumpgeo(
        &[
            "estimate", "--input", "obs.csv", "--l", "4", "--sigma", "0.25", "--h", "0.125", "--r", "0.125", "--out",
            "m.bin",
        ],
        d,
    ));
    assert_eq!(est["cells_per_axis"], 8);
}

#[test]
fn consistency_uses_output_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let status = Command::new(env!("CARGO_BIN_EXE_jumpgeo"))
        .args([
            "consistency",
            "--shape",
            "half-space",
            "--n-values",
            "64",
            "--sigma",
            "0",
            "--calibration-sigma",
            "0.25",
            "--trials",
            "2",
        ])
        .current_dir(dir.path())
        .env("JUMPGEO_OUTPUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out_dir.join("consistency.csv").exists());
    assert!(out_dir.join("consistency.json").exists());
}

#[test]
fn failing_check_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // two circles at N = 64: the calibrated kappa exceeds every death, so the Betti check fails
    let out = jumpgeo(&["consistency", "--n-values", "64", "--trials", "2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["passed"], false);
}

#[test]
fn rate_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["rate-sweep", "--n-values", "32,64", "--trials", "3", "--seed", "9", "--output-dir"];
    let run = |sub: &str| {
        let mut a = args.to_vec();
        a.push(sub);
        jumpgeo(&a, d);
        std::fs::read(d.join(sub).join("rate_sweep.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("oracle.json"),
        r#"{"distance_transform": 20, "offsets": 10, "persistence": 10, "bottleneck": 20, "hausdorff": 10, "histogram": 5, "stability": 5}"#,
    )
    .unwrap();
    let out = jumpgeo(&["oracle-check", "--config", "oracle.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 7);
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.bin"), b"not a header").unwrap();
    let out = jumpgeo(&["estimate", "--input", "junk.bin", "--l", "4", "--out", "m.bin"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = jumpgeo(&["generate", "--shape", "hexagon", "--out", "x.bin"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
