// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::signal::ControlSignal;
use super::SimError;
use crate::costmodel::{LatencyTerms, ResolvedTerms};
use crate::netgraph::{PoolKind, Window};
use crate::scalar::Scalar;

/// Cycle counts of one simulated frame. Cycles are indexed from 0 at the first source beat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamTrace {
    /// Cycle in which the first finished window leaves the PE.
    pub cycles_to_first_valid_output: u64,
    /// Cycles until the last beat of the frame, trailing porch included, has left the PE.
    pub cycles_total: u64,
    pub outputs_emitted: u64,
}

/// One cycle of the optional debug trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub cycle: u64,
    /// Control word injected by the source this cycle, packed as in [`ControlSignal::bits`].
    pub flags: u8,
    pub pad: bool,
    pub event: String,
}

#[derive(Debug, Clone, Copy)]
struct Beat {
    signal: ControlSignal,
    pad: bool,
    last: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Slot {
    window: bool,
    last: bool,
}

/// Fixed-length shift register; `len == 0` passes items straight through.
struct DelayLine<X> {
    q: VecDeque<Option<X>>,
}

impl<X> DelayLine<X> {
    fn new(len: u64) -> Self {
        Self { q: (0..len).map(|_| None).collect() }
    }

    fn step(&mut self, x: Option<X>) -> Option<X> {
        self.q.push_back(x);
        self.q.pop_front().flatten()
    }
}

/// Padded frame source: a half-porch lead-in, then per row `P_b` idle beats,
/// `W + 2·pad` pixels, and `P_f` idle beats.
fn source(width: u64, height: u64, pad: u64, p_b: u64, p_f: u64) -> Vec<Beat> {
    let (w, h) = (width + 2 * pad, height + 2 * pad);
    let idle = Beat { signal: ControlSignal::IDLE, pad: false, last: false };
    let mut beats = vec![idle; (p_b + 2) as usize / 2];
    for r in 0..h {
        beats.extend(std::iter::repeat_n(idle, p_b as usize));
        for c in 0..w {
            let is_pad = r < pad || r >= h - pad || c < pad || c >= w - pad;
            beats.push(Beat { signal: ControlSignal::for_pixel(r, c, w, h), pad: is_pad, last: false });
        }
        beats.extend(std::iter::repeat_n(idle, p_f as usize));
    }
    if let Some(b) = beats.last_mut() {
        b.last = true;
    }
    beats
}

/// Holds the `K - 1` previous rows and assembles `K x K` windows from the flag stream.
struct LineBuffer {
    kernel: u64,
    stride: u64,
    rows: VecDeque<(u64, u64)>,
    row: u64,
    col: u64,
    current_len: u64,
}

impl LineBuffer {
    fn new(kernel: u64, stride: u64) -> Self {
        Self { kernel, stride, rows: VecDeque::new(), row: 0, col: 0, current_len: 0 }
    }

    /// Returns true when this beat completes a window at a stride-aligned position.
    fn accept(&mut self, s: ControlSignal) -> bool {
        if !s.valid {
            return false;
        }
        if s.v_start {
            self.row = 0;
            self.rows.clear();
        }
        if s.h_start {
            self.col = 0;
            self.current_len = 0;
        }
        self.current_len += 1;
        let k = self.kernel;
        let ready = self.row + 1 >= k
            && self.col + 1 >= k
            && (self.row + 1 - k).is_multiple_of(self.stride)
            && (self.col + 1 - k).is_multiple_of(self.stride);
        if ready {
            // every buffered row must already hold the window's columns
            debug_assert_eq!(self.rows.len() as u64, k - 1);
            debug_assert!(self
                .rows
                .iter()
                .enumerate()
                .all(|(i, &(r, len))| r + k - 1 == self.row + i as u64 && len > self.col));
        }
        if s.h_end {
            if k > 1 {
                self.rows.push_back((self.row, self.current_len));
                if self.rows.len() as u64 > k - 1 {
                    self.rows.pop_front();
                }
            }
            self.row += 1;
        } else {
            self.col += 1;
        }
        ready
    }
}

/// Levels of a binary comparator tree over `n` inputs.
fn tree_levels(mut n: u64) -> u64 {
    let mut levels = 0;
    while n > 1 {
        n = n.div_ceil(2);
        levels += 1;
    }
    levels
}

fn run(
    width: u64,
    height: u64,
    window: Window,
    t: &ResolvedTerms,
    compute_delay: u64,
    record: bool,
) -> Result<(StreamTrace, Vec<TraceRow>), SimError> {
    let degenerate = || SimError::DegenerateShape {
        width,
        height,
        kernel: window.kernel,
        stride: window.stride,
        pad: window.padding,
    };
    if width == 0 || height == 0 {
        return Err(degenerate());
    }
    let out_h = window.output_len(height).ok_or_else(degenerate)?;
    let out_w = window.output_len(width).ok_or_else(degenerate)?;

    let beats = source(width, height, window.padding, t.p_b, t.p_f);
    let mut input_delay = DelayLine::new(t.d_in);
    let mut lb = LineBuffer::new(window.kernel, window.stride);
    let mut back = DelayLine::new(t.t_pad + t.t_tap + compute_delay + t.d_out);

    let mut first = None;
    let mut outputs = 0;
    let mut rows = Vec::new();
    let mut cycle = 0u64;
    loop {
        let injected = beats.get(cycle as usize).copied();
        let slot = input_delay.step(injected).map(|b| Slot { window: lb.accept(b.signal), last: b.last });
        let mut event = Vec::new();
        if slot.is_some_and(|s| s.window) {
            event.push("window");
        }
        let exiting = back.step(slot);
        if let Some(s) = exiting {
            if s.window {
                outputs += 1;
                first.get_or_insert(cycle);
                event.push("output");
            }
        }
        if record {
            rows.push(TraceRow {
                cycle,
                flags: injected.map_or(0, |b| b.signal.bits()),
                pad: injected.is_some_and(|b| b.pad),
                event: event.join("+"),
            });
        }
        if exiting.is_some_and(|s| s.last) {
            break;
        }
        cycle += 1;
    }
    debug_assert_eq!(outputs, out_h * out_w);
    let trace = StreamTrace {
        cycles_to_first_valid_output: first.expect("a non-degenerate frame emits a window"),
        cycles_total: cycle + 1,
        outputs_emitted: outputs,
    };
    Ok((trace, rows))
}

fn resolved<T: Scalar>(terms: &LatencyTerms<T>, kernel: u64) -> Result<ResolvedTerms, SimError> {
    terms.check().map_err(|e| SimError::InvalidTerms(e.to_string()))?;
    Ok(terms.resolve(kernel))
}

pub fn simulate_conv_stream_traced<T: Scalar>(
    width: u64,
    height: u64,
    kernel: u64,
    stride: u64,
    pad: u64,
    terms: &LatencyTerms<T>,
) -> Result<(StreamTrace, Vec<TraceRow>), SimError> {
    let t = resolved(terms, kernel)?;
    run(width, height, Window::new(kernel, stride, pad), &t, t.t_mul + t.t_add + t.t_relu, true)
}

/// Streams one padded frame through a conv PE; `D_in` is charged once per frame.
pub fn simulate_conv_stream<T: Scalar>(
    width: u64,
    height: u64,
    kernel: u64,
    stride: u64,
    pad: u64,
    terms: &LatencyTerms<T>,
) -> Result<StreamTrace, SimError> {
    let t = resolved(terms, kernel)?;
    run(width, height, Window::new(kernel, stride, pad), &t, t.t_mul + t.t_add + t.t_relu, false).map(|r| r.0)
}

fn pool_delay(kind: PoolKind, kernel: u64, t: &ResolvedTerms) -> u64 {
    match kind {
        PoolKind::Max => tree_levels(kernel * kernel),
        PoolKind::Avg => t.t_mul + t.t_add,
    }
}

pub fn simulate_pool_stream_traced<T: Scalar>(
    width: u64,
    height: u64,
    kernel: u64,
    stride: u64,
    kind: PoolKind,
    terms: &LatencyTerms<T>,
) -> Result<(StreamTrace, Vec<TraceRow>), SimError> {
    let t = resolved(terms, kernel)?;
    run(width, height, Window::new(kernel, stride, 0), &t, pool_delay(kind, kernel, &t), true)
}

/// Pooling shares the conv memory controller; only the per-window compute differs.
pub fn simulate_pool_stream<T: Scalar>(
    width: u64,
    height: u64,
    kernel: u64,
    stride: u64,
    kind: PoolKind,
    terms: &LatencyTerms<T>,
) -> Result<StreamTrace, SimError> {
    let t = resolved(terms, kernel)?;
    run(width, height, Window::new(kernel, stride, 0), &t, pool_delay(kind, kernel, &t), false).map(|r| r.0)
}

/// CSV with columns `cycle,valid,h_start,h_end,v_start,v_end,pad,event`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<(), SimError> {
    let io = |e: csv::Error| SimError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cycle", "valid", "h_start", "h_end", "v_start", "v_end", "pad", "event"]).map_err(io)?;
    for r in rows {
        let s = ControlSignal::from_bits(r.flags);
        let b = |x: bool| if x { "1" } else { "0" };
        w.write_record([
            r.cycle.to_string().as_str(),
            b(s.valid),
            b(s.h_start),
            b(s.h_end),
            b(s.v_start),
            b(s.v_end),
            b(r.pad),
            r.event.as_str(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}
