//! Scenario harness pieces through the public API.

use ksns::verify::scenario::recipe;
use ksns::verify::{builtin, builtin_on, run_scenario, suite, Outcome, DEFAULT_SEED, SCENARIOS};

#[test]
fn every_builtin_validates_and_matches_its_recipe() {
    for name in SCENARIOS {
        let s = builtin(name, DEFAULT_SEED).unwrap();
        assert_eq!(s.initial, recipe(name, DEFAULT_SEED).unwrap(), "{name}");
    }
}

#[test]
fn suites_name_known_scenarios() {
    for name in [
        "conservation",
        "lyapunov",
        "stabilization",
        "energy",
        "library",
        "all",
    ] {
        for s in suite(name).unwrap() {
            assert!(SCENARIOS.contains(&s));
        }
    }
}

#[test]
fn rotational_flux_keeps_the_certificate_on_a_coarse_grid() {
    let mut s = builtin_on("rotational_flux", 16, DEFAULT_SEED).unwrap();
    s.params.t_end = 0.02;
    let r = run_scenario(&s).unwrap();
    assert!(r.error.is_none());
    for v in &r.verdicts {
        assert_eq!(v.outcome, Outcome::Pass, "{}", r.table());
    }
}
