//! Weak-form residuals of the bump scenario under grid refinement.
//!
//! ```text
//! cargo run --release --example weak_residual [tau]
//! ```

use ksns::diagnostics::{streamed_weak_residual, TestFunction};
use ksns::verify::{builtin_on, DEFAULT_SEED};

fn residuals(cells: usize, tau: f64) -> ksns::Result<[f64; 3]> {
    let s = builtin_on("bump_n", cells, DEFAULT_SEED)?;
    let mut p = s.params.clone();
    p.dt_fixed = None;
    // past tau so that the last step lands beyond the test support
    p.t_end = 1.05 * tau;
    p.diagnostics_every = usize::MAX;
    let r = streamed_weak_residual(&p, s.initial_state()?, &TestFunction::separable(2, tau)?)?;
    Ok([r.r_n, r.r_c, r.r_u])
}

fn main() -> ksns::Result<()> {
    let tau: f64 = std::env::args()
        .nth(1)
        .map_or(0.05, |s| s.parse().expect("tau"));
    let coarse = residuals(32, tau)?;
    let fine = residuals(64, tau)?;
    for (name, (a, b)) in ["n", "c", "u"].iter().zip(coarse.iter().zip(&fine)) {
        println!("r_{name}: N=32 {a:.4e}  N=64 {b:.4e}  ratio {:.3}", a / b);
    }
    Ok(())
}
