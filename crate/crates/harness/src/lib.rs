//! Experiments around the `graded` crate: worked-example verification,
//! gradient checks, training runs and the approximation benchmark.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod gradcheck;
pub mod mlp;
pub mod train_cli;
pub mod verify;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
