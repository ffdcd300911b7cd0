//! End-to-end checks of the command-line binary: scenario execution,
//! artifact emission, and the exit-code contract (0 success, 2 usage,
//! 3 precondition, 4 numeric, 5 check failure).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plaplace"))
}

fn tmp(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("plaplace-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

#[test]
fn all_subcommands_exist_by_name() {
    let out = bin().arg("--help").output().unwrap();
    let help = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "exponents", "solve-radial", "classify", "minimal-growth", "dilate", "lq-check",
        "energy", "picone", "kelvin", "capacity", "flux", "solve-2d", "harnack", "probe",
        "sector", "verify", "emit",
    ] {
        assert!(help.contains(&format!("\n  {sub} ")), "missing subcommand {sub}");
    }
}

#[test]
fn exponents_scenario_runs_and_emits() {
    let dir = tmp("exp");
    let status = bin()
        .args(["exponents", "--scenario"])
        .arg(scenario_path("hardy-exponents.scn"))
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let record = dir.join("hardy-exponents/record.json");
    assert!(record.exists());
    assert!(dir.join("hardy-exponents/exponents.csv").exists());

    // emit plot data from the record
    let status = bin()
        .args(["emit", "--record"])
        .arg(&record)
        .arg("--out")
        .arg(dir.join("plots"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("plots/exponents_plot.csv").exists());
    assert!(dir.join("plots/exponents_plot.csv.manifest.json").exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn usage_errors_exit_2() {
    // unknown subcommand (clap) and task/subcommand mismatch (ours)
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = tmp("usage");
    let out = bin()
        .args(["capacity", "--scenario"])
        .arg(scenario_path("hardy-exponents.scn"))
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn parse_errors_exit_2_with_position() {
    let dir = tmp("parse");
    let bad = dir.join("bad.scn");
    fs::write(&bad, "name = x\ntask = exponents\np = 2\nd = ?\n").unwrap();
    let out = bin()
        .args(["exponents", "--scenario"])
        .arg(&bad)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "stderr: {stderr}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn precondition_errors_exit_3() {
    let dir = tmp("pre");
    let bad = dir.join("super.scn");
    // supercritical coupling: domain error from solve_gamma
    fs::write(
        &bad,
        "name = super\ntask = exponents\np = 2\nd = 3\nlambda = 10\n",
    )
    .unwrap();
    let out = bin()
        .args(["exponents", "--scenario"])
        .arg(&bad)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn failed_checks_exit_5() {
    let dir = tmp("check");
    // capacity with an unreachable tolerance
    let out = bin()
        .args(["capacity", "--scenario"])
        .arg(scenario_path("capacity-newtonian.scn"))
        .arg("--out")
        .arg(&dir)
        .args(["--tol", "capacity_gap=1e-15"])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(5),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn numeric_failures_exit_4() {
    let dir = tmp("numeric");
    let bad = dir.join("stall.scn");
    // too few stages for the fitted exponent to settle: numeric error
    fs::write(
        &bad,
        "name = stall\ntask = minimal-growth\np = 2\nd = 3\nzeta = 0\n\
         r_anchor = 1\nn_stages = 3\n\n[potential]\nhardy = 0.125\n",
    )
    .unwrap();
    let out = bin()
        .args(["minimal-growth", "--scenario"])
        .arg(&bad)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn grid_and_format_overrides_apply() {
    let dir = tmp("fmt");
    let status = bin()
        .args(["solve-radial", "--scenario"])
        .arg(scenario_path("radial-power.scn"))
        .arg("--out")
        .arg(&dir)
        .args(["--grid", "256", "--format", "json"])
        .status()
        .unwrap();
    assert!(status.success());
    // the record embeds the overridden grid
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("radial-power/record.json")).unwrap())
            .unwrap();
    assert_eq!(record["config"]["n"], 256);
    let _ = fs::remove_dir_all(&dir);
}
