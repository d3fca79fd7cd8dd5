//! Decay of a small swirl at rest density: kinetic energy against the
//! Stokes-rate probe, and the per-step energy-identity residual under step
//! halving.
//!
//! ```text
//! cargo run --release --example swirl_energy
//! ```

use ksns::verify::{builtin, run_scenario, DEFAULT_SEED};

fn main() -> ksns::Result<()> {
    let s = builtin("swirl", DEFAULT_SEED)?;
    let report = run_scenario(&s)?;
    print!("{}", report.table());
    Ok(())
}
