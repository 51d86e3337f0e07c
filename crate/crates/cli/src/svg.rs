// SPDX-License-Identifier: Apache-2.0

//! Static scatter of a front: log-scaled latency against DSP slices.

use std::fmt::Write;

use forgemorph_core::dse::CsvRow;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn span(lo: f64, hi: f64, pad: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        (lo - pad, hi + pad)
    } else {
        let m = (hi - lo) * 0.05;
        (lo - m, hi + m)
    }
}

/// Feasible rows are drawn filled (class `pareto`), near-feasible rows hollow (class `near`).
/// Callers reject empty input.
pub fn render(rows: &[CsvRow]) -> String {
    assert!(!rows.is_empty(), "render needs at least one row");
    let lx: Vec<f64> = rows.iter().map(|r| r.latency_s.log10()).collect();
    let (x0, x1) = span(
        lx.iter().copied().fold(f64::INFINITY, f64::min),
        lx.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        0.5,
    );
    let (y0, y1) = span(
        rows.iter().map(|r| r.dsp as f64).fold(f64::INFINITY, f64::min),
        rows.iter().map(|r| r.dsp as f64).fold(f64::NEG_INFINITY, f64::max),
        1.0,
    );
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |v: f64| H - BOTTOM - (v - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#, H - BOTTOM, W - RIGHT);
    for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = px(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" font-size="11" text-anchor="middle">1e{d}</text>"#,
            H - BOTTOM + 18.0
        );
    }
    for i in 0..=4 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{v:.0}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{}" font-size="13" text-anchor="middle">latency (s, log scale)</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {0:.2})">DSP slices</text>"#,
        (TOP + H - BOTTOM) / 2.0
    );
    for (r, &x) in rows.iter().zip(&lx) {
        let (cx, cy) = (px(x), py(r.dsp as f64));
        if r.feasible_flag == 1 {
            let _ = writeln!(
                s,
                r#"<circle class="pareto" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="crimson"><title>{}</title></circle>"#,
                r.allocation
            );
        } else {
            let _ = writeln!(
                s,
                r#"<circle class="near" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="none" stroke="gray"><title>{}</title></circle>"#,
                r.allocation
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
