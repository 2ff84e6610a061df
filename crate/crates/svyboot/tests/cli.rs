use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use svyboot::parallel::{run_bootstrap_parallel, with_workers};
use svyboot_core::bootstrap::run_bootstrap;
use svyboot_core::{DesignKind, DrawnSample, FinitePopulation, RngContract};

fn svyboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svyboot")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// The number printed after `label` in an oracle report.
fn field(report: &str, label: &str) -> f64 {
    let line = report.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("no `{label}` in {report}"));
    line[label.len()..].trim().parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn oracle_poisson_three_units() {
    let dir = tempfile::tempdir().unwrap();
    let pop = write(dir.path(), "pop.csv", "y\n1\n2\n3\n");
    // no size column: pi = n0 / N = 1/3, Var = sum y^2 (1 - pi) / pi = 14 * 2
    let r = stdout(&svyboot(&["oracle", "--population", &pop, "--design", "poisson", "--n0", "1"]));
    assert_eq!(field(&r, "samples enumerated"), 8.0);
    assert!((field(&r, "E[estimate]") - 6.0).abs() < 1e-9);
    assert!((field(&r, "Var(estimate)") - 28.0).abs() < 1e-9);
    assert!((field(&r, "E[var est] / Var") - 1.0).abs() < 1e-9);
}

#[test]
fn oracle_srs_halves_the_variance() {
    let dir = tempfile::tempdir().unwrap();
    let pop = write(dir.path(), "pop.csv", "y\n1\n2\n3\n4\n");
    let r = stdout(&svyboot(&["oracle", "--population", &pop, "--design", "srs", "--n0", "2"]));
    assert_eq!(field(&r, "samples enumerated"), 6.0);
    assert!((field(&r, "E[estimate]") - 10.0).abs() < 1e-9);
    assert!((field(&r, "E[var est] / Var") - 0.5).abs() < 1e-9);
}

#[test]
fn oracle_two_stage_is_unbiased() {
    let dir = tempfile::tempdir().unwrap();
    let pop = write(dir.path(), "clusters.csv", "cluster_id,y\na,1\na,4\na,2\nb,10\nb,7\nb,12\nc,5\nc,6\nc,9\n");
    let r =
        stdout(&svyboot(&["oracle", "--population", &pop, "--design", "two-stage-poisson", "--n1", "1", "--n2", "2"]));
    // equal cluster sizes, so the target is the plain mean 56 / 9
    assert!((field(&r, "target") - 56.0 / 9.0).abs() < 1e-9);
    assert!((field(&r, "E[estimate]") - 56.0 / 9.0).abs() < 1e-9);
    assert!((field(&r, "E[var est] / Var") - 1.0).abs() < 1e-9);
}

#[test]
fn oracle_refuses_large_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..20).map(|i| format!("{i}\n")).collect();
    let pop = write(dir.path(), "pop.csv", &format!("y\n{rows}"));
    let out = svyboot(&["oracle", "--population", &pop, "--design", "poisson", "--n0", "5"]);
    assert!(!out.status.success());
}

#[test]
fn ci_prints_both_intervals_and_ignores_workers() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (1..=40).map(|i| format!("{},{}\n", (i * 7 % 13) as f64 + 0.5, 1.0 + (i % 5) as f64)).collect();
    let pop = write(dir.path(), "pop.csv", &format!("y,z\n{rows}"));
    let sample = write(dir.path(), "sample.csv", "index\n0\n3\n7\n7\n12\n20\n33\n39\n");
    let run = |workers: &str| {
        stdout(&svyboot(&[
            "ci",
            "--population",
            &pop,
            "--sample",
            &sample,
            "--design",
            "pps",
            "--M",
            "300",
            "--seed",
            "5",
            "--workers",
            workers,
        ]))
    };
    let one = run("1");
    assert!(one.contains("wald"));
    assert!(one.contains("bootstrap-t"));
    assert!(one.contains("n = 8, N = 40"));
    assert_eq!(one, run("3"));
}

#[test]
fn ci_rejects_repeated_units_under_srs() {
    let dir = tempfile::tempdir().unwrap();
    let pop = write(dir.path(), "pop.csv", "y\n1\n2\n3\n4\n5\n6\n");
    let sample = write(dir.path(), "sample.csv", "index\n0\n0\n3\n");
    let out = svyboot(&["ci", "--population", &pop, "--sample", &sample, "--design", "srs"]);
    assert!(!out.status.success());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"design": "srs", "n0": 10, "M": 50, "reps": 6, "seed": 3}"#);
    let from_file = stdout(&svyboot(&["simulate", "coverage", "--config", &cfg, "--design", "pps"]));
    let from_flags = stdout(&svyboot(&[
        "simulate", "coverage", "--design", "pps", "--n0", "10", "--M", "50", "--reps", "6", "--seed", "3",
    ]));
    assert_eq!(from_file, from_flags);
    assert!(from_file.starts_with("design,method,n0,n1,n2,coverage,mean_length\npps,bootstrap-t,10,,,"));
}

#[test]
fn unknown_config_keys_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"replicats": 50}"#);
    assert!(!svyboot(&["simulate", "coverage", "--config", &cfg]).status.success());
}

#[test]
fn distribution_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_svyboot"))
        .args(["simulate", "distribution", "--design", "two-stage-pps", "--n1", "5", "--n2", "10"])
        .args(["--reps", "4", "--M", "50", "--truth-draws", "200", "--z-grid", "-0.5,0,0.5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "design,n0,n1,n2,z,P_z,Phi_z,Boot_z");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("two-stage-pps,,5,10,0,"));
    assert_eq!(lines[2].split(',').nth(6), Some("0.500000"));
}

#[test]
fn parallel_bootstrap_matches_sequential() {
    let pop = FinitePopulation::new((0..50).map(|i| (i * i % 17) as f64).collect()).unwrap();
    let sample = DrawnSample::from_indices(&pop, &[0.2; 50], vec![1, 4, 9, 16, 25, 36, 49, 2, 3, 5]);
    let seed = RngContract::new(11);
    for kind in [DesignKind::Poisson, DesignKind::Srs, DesignKind::Pps] {
        let seq = run_bootstrap(&sample, kind, 50, 400, seed).unwrap();
        let par = with_workers(4, || run_bootstrap_parallel(&sample, kind, 50, 400, seed)).unwrap().unwrap();
        assert_eq!(seq, par, "{kind:?}");
    }
}
