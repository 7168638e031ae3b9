use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn gsttcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsttcm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Copy of the shipped configuration with `edit` applied to one file.
fn patched(file: &str, edit: impl Fn(&str) -> String) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in ["gsttcm.cfg", "partitions.cfg", "analysis.cfg"] {
        let text = fs::read_to_string(configs().join(name)).unwrap();
        let text = if name == file { edit(&text) } else { text };
        fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

#[test]
fn quick_verify_passes() {
    let out = gsttcm(&["verify", "--quick", "--config", arg(&configs().join("gsttcm.cfg"))]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("0 failed"));
}

#[test]
fn corrupted_partition_fails_verification() {
    let dir = patched("partitions.cfg", |t| t.replacen("begin level 2", "begin level 3", 1));
    let out = gsttcm(&["verify", "--quick", "--config", arg(&dir.path().join("gsttcm.cfg"))]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("FAIL partition E8: floors"), "{text}");
}

#[test]
fn syntax_error_reports_location() {
    let dir = patched("gsttcm.cfg", |t| t.replacen("states = 4", "states = four", 1));
    let cfg = dir.path().join("gsttcm.cfg");
    let out = gsttcm(&["analyze", "--config", arg(&cfg), "--out", arg(&dir.path().join("out"))]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2), "{err}");
    assert!(err.contains("gsttcm.cfg:") && err.contains("states"), "{err}");
}

#[test]
fn missing_config_is_config_error() {
    let out = gsttcm(&["verify", "--config", "/nonexistent/gsttcm.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_small_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = gsttcm(&["analyze", "--config", arg(&configs().join("fig5.cfg")), "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("analysis.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("4,E8,2,4,1,2,12,3,"), "{row}");
    assert!(row.ends_with(",yes"), "{row}");
}

#[test]
fn simulate_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.cfg");
    fs::write(
        &plan,
        "[plan]\ncode = e8_4\nL = 24\nN = 1 24\nsnr_b_db = 12 14\nseed = 9\nmin_errors = 5\nmax_frames = 200\n",
    )
    .unwrap();
    let run = |workers: &str| {
        let out_dir = dir.path().join(format!("w{workers}"));
        let out = gsttcm(&[
            "simulate",
            "--config",
            arg(&configs().join("gsttcm.cfg")),
            "--plan",
            arg(&plan),
            "--out",
            arg(&out_dir),
            "--workers",
            workers,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(out_dir.join("fer.csv")).unwrap(),
            fs::read_to_string(out_dir.join("cells.csv")).unwrap(),
        )
    };
    let (one, cells) = run("1");
    assert_eq!(run("4").0, one);
    assert!(cells.starts_with("N,snr_b_db,status\n"));
    assert_eq!(cells.lines().count(), 5);
}

#[test]
fn simulate_rejects_bad_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.cfg");
    fs::write(&plan, "[plan]\ncode = e8_4\nL = 120\nN = 7\nsnr_b_db = 10\n").unwrap();
    let out = gsttcm(&[
        "simulate",
        "--config",
        arg(&configs().join("gsttcm.cfg")),
        "--plan",
        arg(&plan),
        "--out",
        arg(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
