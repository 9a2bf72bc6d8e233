//! End-to-end checks of the command-line surface: subcommands, file
//! schemas, determinism, and exit codes. Runs at a coarse step so the whole
//! suite stays quick.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pps4bp"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pps4bp_cli_{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Coarse but accurate step for test runs: π/20000.
const COARSE_H: &str = "1.5707963267948966e-4";

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn stability_single_writes_results_and_is_deterministic() {
    let dir = workdir("single");
    let out1 = dir.join("row1.csv");
    let out2 = dir.join("row2.csv");
    for out in [&out1, &out2] {
        let status = binary()
            .args([
                "stability",
                "single",
                "--m",
                "0.539",
                "--h-step",
                COARSE_H,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let text1 = read(&out1);
    assert_eq!(text1, read(&out2), "two identical runs must produce identical bytes");
    let lines: Vec<&str> = text1.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("m,E_hat,lam1_re,lam1_im"));
    assert!(lines[1].contains("LinearlyStable"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_figure_and_orbit_store_roundtrip() {
    let dir = workdir("sweep");
    let results = dir.join("results.csv");
    let orbits = dir.join("orbits.csv");
    let figure = dir.join("figure.csv");
    let script = dir.join("figure.gp");

    let status = binary()
        .args([
            "stability",
            "sweep",
            "--from",
            "0.54",
            "--to",
            "0.56",
            "--step",
            "0.01",
            "--h-step",
            COARSE_H,
            "--out",
            results.to_str().unwrap(),
            "--orbits",
            orbits.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let results_text = read(&results);
    assert_eq!(results_text.lines().count(), 4, "header plus three masses");

    let orbit_lines: Vec<String> = read(&orbits).lines().map(String::from).collect();
    assert_eq!(orbit_lines[0], "m,E_hat,u1,u2,v1,v2,residual_norm,A_value,closure_error");
    assert_eq!(orbit_lines.len(), 4);
    // Sorted ascending by mass.
    let first: f64 = orbit_lines[1].split(',').next().unwrap().parse().unwrap();
    let last: f64 = orbit_lines[3].split(',').next().unwrap().parse().unwrap();
    assert!(first < last);

    let status = binary()
        .args([
            "figure",
            "emit",
            "--results",
            results.to_str().unwrap(),
            "--out",
            figure.to_str().unwrap(),
            "--script",
            script.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let figure_text = read(&figure);
    assert!(figure_text.starts_with("m,eig,value"));
    // All three masses here are linearly stable with three real eigenvalues.
    assert_eq!(figure_text.lines().count(), 1 + 9);
    assert!(read(&script).contains("plot"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn orbit_refine_writes_store() {
    let dir = workdir("refine");
    let out = dir.join("orbit.csv");
    let output = binary()
        .args([
            "orbit",
            "refine",
            "--m",
            "0.539",
            "--h-step",
            COARSE_H,
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("E_hat"));
    assert_eq!(read(&out).lines().count(), 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_invariants_reports_ok_lines() {
    let output = binary()
        .args(["check", "invariants", "--m", "0.539", "--h-step", COARSE_H])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("K formula agreement"));
    assert!(stdout.contains("class = LinearlyStable"));
    assert!(!stdout.contains("EXCEEDED"), "invariant exceeded:\n{stdout}");
}

#[test]
fn usage_errors_exit_with_code_two() {
    // Mass outside (0, 1] is rejected before any computation.
    let output = binary().args(["stability", "single", "--m", "1.5"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    // A step that does not divide the range is a configuration error.
    let output = binary()
        .args([
            "stability", "sweep", "--from", "0.5", "--to", "0.52", "--step", "0.015", "--out",
            "/tmp/unused.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // Unknown flags are clap usage errors.
    let output = binary().args(["stability", "single", "--bogus"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn malformed_figure_input_exits_with_code_one() {
    let dir = workdir("figure_err");
    let bogus = dir.join("bogus.csv");
    std::fs::write(&bogus, "not,a,results,file\n").unwrap();
    let output = binary()
        .args([
            "figure",
            "emit",
            "--results",
            bogus.to_str().unwrap(),
            "--out",
            dir.join("out.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}
