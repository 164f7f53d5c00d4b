//! `reproduce` outputs under the default seeds must match the committed files.

use std::path::Path;
use std::process::Command;

fn check(figure: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_coopmac"))
        .args(["reproduce", figure, "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for suffix in ["boundary.csv", "summary.json"] {
        let name = format!("{figure}_{suffix}");
        let got = std::fs::read(dir.path().join(&name)).unwrap();
        let want = std::fs::read(golden.join(&name)).unwrap();
        assert!(got == want, "{name} differs from the golden file");
    }
}

#[test]
fn fig3_matches_golden() {
    check("fig3");
}

#[test]
fn fig4_matches_golden() {
    check("fig4");
}

#[test]
fn fig5_matches_golden() {
    check("fig5");
}
