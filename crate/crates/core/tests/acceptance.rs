//! Acceptance run: every criterion at its stated tolerance, one PASS/FAIL
//! line each. Exits nonzero when a criterion fails unexpectedly, or when a
//! criterion listed in [`KNOWN_FAILURES`] starts passing (so the list
//! cannot go stale).
//!
//! ```text
//! cargo test --release --test acceptance            # all criteria
//! cargo test --release --test acceptance -- c7 c11  # a subset
//! ```

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ksns::diagnostics::{poincare_constant, streamed_weak_residual, TestFunction};
use ksns::grid::Grid;
use ksns::verify::{
    builtin, builtin_on, epsilon_ladder, mms_convergence, run_scenario, Assertion, MmsCase,
    Outcome, VerdictReport, DEFAULT_SEED,
};

type Measured = ksns::Result<(bool, String)>;

/// `(pass, detail)` over the verdicts whose labels are listed; a missing
/// label fails.
fn verdicts(report: &VerdictReport, labels: &[&str]) -> (bool, String) {
    let mut ok = report.error.is_none();
    let mut detail = Vec::new();
    if let Some(e) = &report.error {
        detail.push(format!("aborted: {e}"));
    }
    for label in labels {
        match report.verdicts.iter().find(|v| v.label == *label) {
            Some(v) => {
                ok &= v.outcome == Outcome::Pass;
                detail.push(format!(
                    "{label}={} ({:.6e}; {})",
                    v.outcome.as_str(),
                    v.measured,
                    v.detail
                ));
            }
            None => {
                ok = false;
                detail.push(format!("{label} missing"));
            }
        }
    }
    (ok, detail.join(" | "))
}

fn bump_conservation() -> ksns::Result<(VerdictReport, f64)> {
    let mut s = builtin("bump_n", DEFAULT_SEED)?;
    s.checks.retain(|c| {
        matches!(
            c.assertion,
            Assertion::MassDrift { .. } | Assertion::SignalMassBound { .. }
        )
    });
    let start = Instant::now();
    let r = run_scenario(&s)?;
    Ok((r, start.elapsed().as_secs_f64()))
}

fn c1_c2() -> [(&'static str, Measured); 2] {
    match bump_conservation() {
        Ok((r, secs)) => {
            let (m_ok, m) = verdicts(&r, &["mass_drift"]);
            let (c_ok, c) = verdicts(&r, &["signal_mass_bound"]);
            let steps_ok = r.steps == 10_000;
            [
                (
                    "c1",
                    Ok((
                        m_ok && steps_ok && secs <= 60.0,
                        format!("steps={} runtime={secs:.1}s (limit 60s) | {m}", r.steps),
                    )),
                ),
                ("c2", Ok((c_ok && steps_ok, c))),
            ]
        }
        Err(e) => [("c1", Err(clone_err(&e))), ("c2", Err(e))],
    }
}

fn clone_err(e: &ksns::Error) -> ksns::Error {
    ksns::Error::Validation(e.to_string())
}

fn stabilization() -> ksns::Result<(VerdictReport, f64, String)> {
    let s = builtin("random_perturbation", DEFAULT_SEED)?;
    let c_n = s.params.poincare.expect("scenario sets C_N");
    let cs = s.params.sensitivity.cs();
    let setup = format!(
        "N={} alpha={} C_S={cs:.6} sqrt(C_N)={:.6}",
        s.params.grid.cells()[0],
        s.params.sensitivity.alpha(),
        c_n.sqrt()
    );
    if (cs - c_n.sqrt()).abs() > 1e-12 || s.params.sensitivity.alpha() != 1.0 {
        return Err(ksns::Error::Validation(format!(
            "scenario setup drifted: {setup}"
        )));
    }
    let start = Instant::now();
    let r = run_scenario(&s)?;
    Ok((r, start.elapsed().as_secs_f64(), setup))
}

fn c3_c4_c6() -> [(&'static str, Measured); 3] {
    match stabilization() {
        Ok((r, secs, setup)) => {
            let (l_ok, l) = verdicts(&r, &["lyapunov_feasible", "lyapunov_monotone"]);
            [
                (
                    "c3",
                    Ok((
                        l_ok && secs <= 300.0,
                        format!("{setup} runtime={secs:.1}s (limit 300s) | {l}"),
                    )),
                ),
                (
                    "c4",
                    Ok(verdicts(
                        &r,
                        &["decay_rate[l2_dev_sum]", "steady_distance_drop"],
                    )),
                ),
                (
                    "c6",
                    Ok(verdicts(
                        &r,
                        &["decay_rate[grad_c_l2]", "decay_rate[grad_c_l4]"],
                    )),
                ),
            ]
        }
        Err(e) => [
            ("c3", Err(clone_err(&e))),
            ("c4", Err(clone_err(&e))),
            ("c6", Err(e)),
        ],
    }
}

fn c5() -> Measured {
    let r = run_scenario(&builtin("swirl", DEFAULT_SEED)?)?;
    Ok(verdicts(&r, &["stokes_rate", "energy_residual_halving"]))
}

fn c7() -> Measured {
    let exact = 1.0 / std::f64::consts::PI.powi(2);
    let square = poincare_constant(&Grid::new(2, &[1.0, 1.0], &[64, 64])?)?;
    let cube = poincare_constant(&Grid::new(3, &[1.0; 3], &[32; 3])?)?;
    let (es, ec) = ((square / exact - 1.0).abs(), (cube / exact - 1.0).abs());
    Ok((
        es <= 0.01 && ec <= 0.03,
        format!("square64 C_N={square:.6} rel_err={es:.2e} (<=1%) | cube32 C_N={cube:.6} rel_err={ec:.2e} (<=3%)"),
    ))
}

fn weak(cells: usize, tau: f64) -> ksns::Result<[f64; 3]> {
    let s = builtin_on("bump_n", cells, DEFAULT_SEED)?;
    let mut p = s.params.clone();
    p.dt_fixed = None;
    p.t_end = 1.05 * tau;
    p.diagnostics_every = usize::MAX;
    let r = streamed_weak_residual(&p, s.initial_state()?, &TestFunction::separable(2, tau)?)?;
    Ok([r.r_n, r.r_c, r.r_u])
}

fn c8() -> Measured {
    let tau = 0.05;
    let coarse = weak(32, tau)?;
    let fine = weak(64, tau)?;
    let mut ok = true;
    let mut detail = vec![format!("tau={tau}")];
    for (name, (a, b)) in ["n", "c", "u"].iter().zip(coarse.iter().zip(&fine)) {
        let ratio = a / b;
        ok &= (1.4..=2.6).contains(&ratio);
        detail.push(format!("r_{name} {a:.3e}->{b:.3e} ratio={ratio:.3}"));
    }
    Ok((ok, detail.join(" | ")))
}

fn c9() -> Measured {
    let s = builtin("bump_n", DEFAULT_SEED)?;
    let mut base = s.params.clone();
    // the bump horizon, with the step re-derived over all rungs
    base.dt_fixed = None;
    let r = epsilon_ladder(&base, &s.initial_state()?, &[0.4, 0.2, 0.1, 0.05])?;
    let d: Vec<String> = r.distances.iter().map(|d| format!("{d:.3e}")).collect();
    Ok((
        r.passed(),
        format!(
            "T={:.4} dt={:.3e} distances=[{}] inversions={}",
            r.t_final,
            r.dt,
            d.join(", "),
            r.inversions
        ),
    ))
}

fn c10() -> Measured {
    let res = [16, 32, 64];
    let mut ok = true;
    let mut detail = Vec::new();
    for case in [MmsCase::diffusion_only(), MmsCase::full_coupling()] {
        let r = mms_convergence(&case, &res)?;
        ok &= r.passed();
        let orders: Vec<String> = r
            .orders
            .iter()
            .map(|o| o.map_or("-".into(), |o| format!("{o:.3}")))
            .collect();
        detail.push(format!(
            "{} orders=[{}] need {:?}",
            r.case,
            orders.join(", "),
            r.expected_order
        ));
    }
    Ok((ok, detail.join(" | ")))
}

fn cli_run(dir: &Path, config: &Path, out: &str, threads: usize) -> ksns::Result<Vec<u8>> {
    let status = Command::new(env!("CARGO_BIN_EXE_ksns"))
        .args(["--threads", &threads.to_string(), "run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(dir.join(out))
        .args(["--seed", "7"])
        .output()?;
    if !status.status.success() {
        return Err(ksns::Error::Validation(format!(
            "ksns run failed: {}",
            String::from_utf8_lossy(&status.stderr)
        )));
    }
    Ok(fs::read(dir.join(out).join("series.csv"))?)
}

fn c11() -> Measured {
    let dir = std::env::temp_dir().join(format!("ksns-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let config = dir.join("run.ini");
    fs::write(
        &config,
        "[grid]\ndim = 2\ncells = 32\nextents = 1, 1\n\n[physics]\nkind = rotational\ntheta = 1\ncs = 0.3\n\n[run]\nt_end = 0.05\nscenario = random\n",
    )?;
    let a = cli_run(&dir, &config, "a", 1)?;
    let b = cli_run(&dir, &config, "b", 1)?;
    let c = cli_run(&dir, &config, "c", 4)?;
    let rows = a.iter().filter(|&&x| x == b'\n').count();
    let _ = fs::remove_dir_all(&dir);
    Ok((
        a == b && a == c && rows > 2,
        format!(
            "rows={rows} bytes={} repeat_identical={} threads1_vs_4_identical={}",
            a.len(),
            a == b,
            a == c
        ),
    ))
}

/// Criteria that fail for an understood reason (see the README). They
/// still print FAIL.
const KNOWN_FAILURES: [&str; 1] = ["c9"];

const TITLES: [(&str, &str); 11] = [
    ("c1", "mass conservation, 64^2 bump, 1e4 steps"),
    ("c2", "signal quasi-mass bound"),
    ("c3", "Lyapunov monotonicity"),
    ("c4", "exponential stabilization"),
    ("c5", "velocity energy decay"),
    ("c6", "grad c decay"),
    ("c7", "Poincare constant"),
    ("c8", "weak-residual consistency"),
    ("c9", "eps-ladder Cauchy trend"),
    ("c10", "MMS convergence"),
    ("c11", "determinism"),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let wanted =
        |ids: &[&str]| filters.is_empty() || ids.iter().any(|i| filters.iter().any(|f| f == i));

    let mut results: Vec<(&str, Measured, f64)> = Vec::new();
    let mut timed = |ids: &[&'static str], f: &dyn Fn() -> Vec<(&'static str, Measured)>| {
        if !wanted(ids) {
            return;
        }
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        for (id, o) in out {
            results.push((id, o, secs));
        }
    };
    timed(&["c1", "c2"], &|| c1_c2().into());
    timed(&["c3", "c4", "c6"], &|| c3_c4_c6().into());
    timed(&["c5"], &|| vec![("c5", c5())]);
    timed(&["c7"], &|| vec![("c7", c7())]);
    timed(&["c8"], &|| vec![("c8", c8())]);
    timed(&["c9"], &|| vec![("c9", c9())]);
    timed(&["c10"], &|| vec![("c10", c10())]);
    timed(&["c11"], &|| vec![("c11", c11())]);

    let mut failed = 0;
    let mut unexpected = Vec::new();
    for (id, title) in TITLES {
        let Some((_, outcome, secs)) = results.iter().find(|(i, _, _)| *i == id) else {
            continue;
        };
        let (pass, detail) = match outcome {
            Ok((p, d)) => (*p, d.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_FAILURES.contains(&id);
        if !pass {
            failed += 1;
        }
        if pass == known {
            unexpected.push(id);
        }
        let note = match (pass, known) {
            (false, true) => " (known failure)",
            (true, true) => " (listed as a known failure: update the list)",
            _ => "",
        };
        println!(
            "{} {id:<3} {title} [{secs:.1}s]{note} :: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {} run, {failed} failed, unexpected: [{}]",
        results.len(),
        unexpected.join(", ")
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
