use std::fs;
use std::path::Path;
use std::process::Command;

use hand_codesign::io::read_manifest;

fn cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hand-codesign"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

const SEARCH: &[&str] =
    &["search", "--seed", "11", "--evaluator", "oracle", "--iterations", "4", "--candidates", "6"];

#[test]
fn search_is_reproducible_from_its_manifest() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(cli(SEARCH, a.path()).status.success());
    assert!(cli(SEARCH, b.path()).status.success());
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "manifest.json"), read(b.path(), "manifest.json"));
    assert_eq!(read(a.path(), "history.csv"), read(b.path(), "history.csv"));
    assert_eq!(read(a.path(), "best.json"), read(b.path(), "best.json"));

    let manifest = a.path().join("manifest.json");
    let m = read_manifest(&manifest).unwrap();
    assert_eq!(m.seed, 11);
    assert_eq!(fs::read_to_string(a.path().join("history.csv")).unwrap().lines().count(), 5);

    let rerun = cli(&["search", "--config", manifest.to_str().unwrap()], c.path());
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    assert_eq!(read(a.path(), "history.csv"), read(c.path(), "history.csv"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["eval", "--design", "/nonexistent.json"], d.path()).status.code(), Some(1));
    assert_eq!(cli(&["baseline", "--algo", "sideways"], d.path()).status.code(), Some(1));
    let bad = d.path().join("bad.json");
    fs::write(&bad, "{\"schema_version\": 1, \"palm\": 3}").unwrap();
    let out = cli(&["eval", "--design", bad.to_str().unwrap()], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}
