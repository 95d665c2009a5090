//! End-to-end runs of the `sicaoi` binary on a small scenario.

use std::path::Path;
use std::process::{Command, Output};

use sicaoi::harness::{read_csv, CSV_SCHEMA};

fn sicaoi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sicaoi"))
        .args(args)
        .current_dir(dir)
        .env("SICAOI_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_scenario(dir: &Path) {
    std::fs::write(dir.join("small.cfg"), "n = 8\nS = 0.05\nmc_trials = 3000\nseed = 5\n").unwrap();
}

#[test]
fn policy_analytic_sweep_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_scenario(d);
    let base = ["--config", "small.cfg", "--out", "out"];

    let o = sicaoi(&[&["policy", "build"][..], &base].concat(), d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("k_c = "));
    assert!(d.join("out/policy_fitted.txt").exists() && d.join("out/policy_raw.txt").exists());
    assert_eq!(std::fs::read_dir(d.join("out/cache")).unwrap().count(), 1);

    let o = sicaoi(&[&["policy", "show", "--form", "raw"][..], &base].concat(), d);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#')).count(), 8);

    let o = sicaoi(&[&["analytic", "run", "--s-ms", "5,50,500"][..], &base].concat(), d);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with(&format!("# schema: {CSV_SCHEMA}")));
    assert_eq!(text.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 3);

    let o = sicaoi(
        &[
            &[
                "sweep",
                "--mode",
                "both",
                "--s-ms",
                "10,100",
                "--replications",
                "3",
                "--slots",
                "5000",
            ][..],
            &base,
        ]
        .concat(),
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&d.join("out/sweep.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        rows.iter()
            .filter(|r| r.mode == "simulate" && r.p_s_ci.is_some())
            .count(),
        2
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("out/summary.json")).unwrap()).unwrap();
    assert!(summary["s_inf_ms"].as_f64().unwrap() > 0.0);

    let o = sicaoi(&["compare", "--analytic", "out/sweep.csv", "--sim", "out/sweep.csv"], d);
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 5);
}

#[test]
fn simulate_with_policy_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_scenario(d);
    let table: String = (1..=8).map(|k| format!("{k} {} 31\n", 1.0 / k as f64)).collect();
    std::fs::write(d.join("slotted.txt"), table).unwrap();
    let o = sicaoi(
        &[
            "simulate",
            "run",
            "--config",
            "small.cfg",
            "--policy-override",
            "slotted.txt",
            "--s-ms",
            "100",
            "--replications",
            "2",
            "--slots",
            "4000",
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("100")).count(), 1);
    // No policy was needed, so nothing was cached.
    assert!(!d.join("out/cache").exists());
}

#[test]
fn errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.cfg"), "n = 0\n").unwrap();
    let o = sicaoi(&["analytic", "run", "--config", "bad.cfg"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n must be"));

    let o = Command::new(env!("CARGO_BIN_EXE_sicaoi"))
        .args(["policy", "show"])
        .current_dir(d)
        .env("SICAOI_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = sicaoi(&["compare", "--analytic", "missing.csv", "--sim", "missing.csv"], d);
    assert_eq!(o.status.code(), Some(2));
}
