//! Runs a verification suite and prints one table per scenario.
//!
//! ```text
//! cargo run --release --example scenarios -- library
//! ```

use ksns::verify::{run_suite, DEFAULT_SEED};

fn main() -> ksns::Result<()> {
    let suite = std::env::args().nth(1).unwrap_or_else(|| "library".into());
    for report in run_suite(&suite, DEFAULT_SEED)? {
        print!("{}", report.table());
    }
    Ok(())
}
