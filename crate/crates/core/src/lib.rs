//! Low-delay streaming erasure codes over GF(2^m).
//!
//! A source packet of `k` sub-symbols arrives every time slot; the encoder
//! emits a channel packet of `n` sub-symbols causally, and the decoder must
//! reproduce each source packet within a fixed delay of `T` slots. This crate
//! provides the code constructions (random linear convolutional codes, the
//! maximum-span repetition layout, and the embedded two-group family with a
//! tunable parity shift), exact delay-constrained distance/span analyzers with
//! the rate tradeoff bound, bursty channel models, a streaming elimination
//! decoder, and an experiment harness that writes reproducible CSV reports.

pub mod channel;
pub mod cli;
pub mod code;
pub mod decode;
mod elim;
pub mod gf;
pub mod metrics;
mod seeds;
pub mod sim;

pub use code::{ChannelPacket, CodeError, CodeSpec, SourcePacket};
pub use decode::LossReport;
pub use gf::{Field, Matrix};
pub use metrics::MetricReport;

/// Renders a float with six significant digits, the fixed precision of every
/// floating value in CSV output.
pub(crate) fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}
