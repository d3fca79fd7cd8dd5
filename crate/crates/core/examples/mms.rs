//! Grid-refinement study against manufactured solutions.
//!
//! ```text
//! cargo run --release --example mms
//! ```

use ksns::verify::mms::{mms_convergence, MmsCase};

fn main() -> ksns::Result<()> {
    for case in [
        MmsCase::steady(),
        MmsCase::diffusion_only(),
        MmsCase::full_coupling(),
    ] {
        let report = mms_convergence(&case, &[16, 32, 64])?;
        println!("{}", report.key_values());
    }
    Ok(())
}
