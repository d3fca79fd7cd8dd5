//! Cauchy trend of the regularized solutions as `eps` decreases.
//!
//! ```text
//! cargo run --release --example epsilon_ladder
//! ```

use ksns::verify::{builtin_on, epsilon_ladder, DEFAULT_SEED};

fn main() -> ksns::Result<()> {
    let s = builtin_on("bump_n", 64, DEFAULT_SEED)?;
    let mut base = s.params.clone();
    base.dt_fixed = None;
    base.t_end = std::env::args()
        .nth(1)
        .map_or(0.05, |t| t.parse().expect("end time"));
    let report = epsilon_ladder(&base, &s.initial_state()?, &[0.4, 0.2, 0.1, 0.05])?;
    print!("{}", report.key_values());
    Ok(())
}
