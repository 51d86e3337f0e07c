// SPDX-License-Identifier: Apache-2.0

//! Cycle-counting simulator of the line-buffer + MAC streaming pipeline.
//!
//! Pixels enter one per cycle tagged with a 5-bit control word. The simulator
//! tracks only timing; no pixel values are computed.

mod signal;
mod sim;

pub use signal::ControlSignal;
pub use sim::{
    simulate_conv_stream, simulate_conv_stream_traced, simulate_pool_stream, simulate_pool_stream_traced,
    write_trace_csv, StreamTrace, TraceRow,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("degenerate stream: {width}x{height} frame with K={kernel}, S={stride}, pad={pad}")]
    DegenerateShape { width: u64, height: u64, kernel: u64, stride: u64, pad: u64 },
    #[error("invalid latency terms: {0}")]
    InvalidTerms(String),
    #[error("trace output failed: {0}")]
    Io(String),
}
