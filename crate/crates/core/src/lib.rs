//! Simulator and verification harness for a Keller–Segel system coupled to
//! incompressible Navier–Stokes flow, with tensor-valued chemotactic
//! sensitivity.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fluid;
pub mod grid;
pub mod sensitivity;
pub mod snapshot;
pub mod stepper;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
