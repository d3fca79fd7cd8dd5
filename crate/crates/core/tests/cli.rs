//! The command-line front end, driven as a subprocess.

use std::fs;
use std::process::{Command, Output};

fn ksns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksns"))
        .args(args)
        .output()
        .expect("spawn ksns")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn poincare_prints_the_unit_square_constant() {
    let o = ksns(&[
        "poincare",
        "--dim",
        "2",
        "--cells",
        "64",
        "--extents",
        "1,1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let c: f64 = text.trim().strip_prefix("C_N=").unwrap().parse().unwrap();
    let exact = 1.0 / std::f64::consts::PI.powi(2);
    assert!((c / exact - 1.0).abs() < 0.01, "{text}");
}

#[test]
fn poincare_rejects_mismatched_axes() {
    let o = ksns(&["poincare", "--dim", "3", "--cells", "8,8", "--extents", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_then_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    fs::write(
        &cfg,
        "[grid]\ndim = 2\ncells = 12\nextents = 1, 1\n[run]\nt_end = 0.05\nscenario = random\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ksns(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("status=complete"));
    assert!(report.contains("out = ") && report.contains("seed = "));

    let o = ksns(&[
        "rates",
        out.join("series.csv").to_str().unwrap(),
        "--kappa-pred",
        "0.05",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("rate.l2_dev_sum.rate="), "{text}");
    assert!(text.contains("rate.l2_dev_sum.over_kappa_pred="));
}

#[test]
fn seed_changes_random_data_only_through_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    fs::write(
        &cfg,
        "[grid]\ndim = 2\ncells = 8\nextents = 1, 1\n[run]\nt_end = 0.005\nscenario = random\n",
    )
    .unwrap();
    let csv = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = ksns(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        fs::read(out.join("series.csv")).unwrap()
    };
    assert_eq!(csv("a", "1"), csv("b", "1"));
    assert_ne!(csv("a", "1"), csv("c", "2"));
}

#[test]
fn bad_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    fs::write(
        &cfg,
        "[grid]\ndim = 2\ncells = 8\nextents = 1, 1\n[physics]\nalpha = 0.5\n",
    )
    .unwrap();
    let o = ksns(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 6") && err.contains("alpha>=1"), "{err}");
}

#[test]
fn unknown_suite_is_an_error() {
    let o = ksns(&["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mms_needs_three_resolutions() {
    let o = ksns(&["mms", "--case", "steady", "--cells", "8,16"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn steady_mms_passes() {
    let o = ksns(&["mms", "--case", "steady", "--cells", "4,8,12"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("passed=true"));
}
