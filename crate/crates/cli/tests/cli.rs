use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coopmac"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p
}

/// Data rows of a CSV export, without the `#` preamble.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn c(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

#[test]
fn pentagon_config_gives_five_hand_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["region", "--config", config("region_pentagon.json").to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("vertices.csv"));
    assert_eq!(rows[0], ["R1", "R2"]);
    assert_eq!(rows.len(), 6);
    // P = (3, 1), unit gains, unit noise
    let (a1, a2, a12) = (c(3.0), c(1.0), c(4.0));
    let mut expected = vec![(0.0, 0.0), (0.0, a2), (a12 - a2, a2), (a1, 0.0), (a1, a12 - a1)];
    expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for (row, (r1, r2)) in rows[1..].iter().zip(expected) {
        let got: Vec<f64> = row.iter().map(|v| v.parse().unwrap()).collect();
        assert!((got[0] - r1).abs() < 1e-5 && (got[1] - r2).abs() < 1e-5, "{row:?} vs ({r1}, {r2})");
    }
}

#[test]
fn common_message_vertices_carry_r0() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["region", "--config", config("region_rayleigh_cm.json").to_str().unwrap()], dir.path());
    assert!(out.status.success());
    assert_eq!(csv_rows(&dir.path().join("vertices.csv"))[0], ["R0", "R1", "R2"]);
    let text = std::fs::read_to_string(dir.path().join("constraints.csv")).unwrap();
    assert!(text.starts_with("# tool: coopmac "));
    assert!(text.contains("# engine: quad(nodes=64)\n"));
}

#[test]
fn negative_power_exits_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"channel": {"num_tx": 2, "power": [-1, 1], "fading": {"kind": "unit"}}}"#);
    let target = dir.path().join("out");
    let out = run(&["region", "--config", cfg.to_str().unwrap()], &target);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/channel/power/0"));
    assert!(!target.exists());
}

#[test]
fn unknown_keys_are_reported_by_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"channel": {"num_tx": 2, "power": [1, 1], "fading": {"kind": "unit"}, "gain": 3}}"#);
    let out = run(&["region", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("'/channel") && err.contains("gain"), "{err}");

    let out = run(&["region", "--config", cfg.to_str().unwrap(), "--set", "/bogus=1"], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn capability_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"channel": {"num_tx": 4, "power": [1, 1, 1, 1], "fading": {"kind": "unit"}}}"#);
    let out = run(&["region", "--config", cfg.to_str().unwrap()], &dir.path().join("a"));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // constraints alone are fine for p = 4
    let out = run(&["region", "--config", cfg.to_str().unwrap(), "--set", "/region/vertices=false"], &dir.path().join("b"));
    assert!(out.status.success());

    let out = run(&["region", "--config", cfg.to_str().unwrap(), "--set", r#"/engine={"quad":{"nodes":8}}"#], &dir.path().join("c"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn over_budget_policy_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "region",
            "--config",
            config("region_pentagon.json").to_str().unwrap(),
            "--set",
            r#"/policy/constant={"phi":[5,1],"rho":[0,0]}"#,
        ],
        &dir.path().join("out"),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn conferencing_is_refused_by_region() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["region", "--config", config("conf_region.json").to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/conferencing"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("region_csit_threshold.json");
    for name in ["a", "b"] {
        assert!(run(&["region", "--config", cfg.to_str().unwrap()], &dir.path().join(name)).status.success());
    }
    for f in ["constraints.csv", "vertices.csv"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn json_export_reingests_as_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("region_csit_threshold.json");
    let first = dir.path().join("first");
    assert!(run(&["region", "--config", cfg.to_str().unwrap(), "--format", "json"], &first).status.success());
    let export = first.join("constraints.json");
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&export).unwrap()).unwrap();
    assert_eq!(doc["data"]["columns"], serde_json::json!(["receiver", "constraint", "bound", "std_error"]));
    assert!(doc["provenance"]["seeds"]["engine"] == 7);

    let second = dir.path().join("second");
    assert!(run(&["region", "--overrides", export.to_str().unwrap(), "--format", "json"], &second).status.success());
    for f in ["constraints.json", "vertices.json"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn every_example_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, name) in [
        ("conf-region", "conf_region.json"),
        ("frontier", "frontier_conf.json"),
        ("discrete", "discrete_adder.json"),
        ("simulate", "simulate_adder.json"),
        ("equiv-check", "equiv.json"),
    ] {
        let out = run(&[cmd, "--config", config(name).to_str().unwrap()], &dir.path().join(name));
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let rows = csv_rows(&dir.path().join("simulate_adder.json").join("error_curve.csv"));
    assert_eq!(
        rows[0].join(","),
        "n,nominal_R0,nominal_R1,nominal_R2,realized_R0,realized_R1,realized_R2,trials,errors,error_rate,ci_low,ci_high"
    );
    let rows = csv_rows(&dir.path().join("conf_region.json").join("constraints.csv"));
    assert_eq!(rows.last().unwrap()[1], "R1+R2 [uncredited]");
}
