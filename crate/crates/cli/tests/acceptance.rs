// SPDX-License-Identifier: Apache-2.0

//! Exit-gate checks, one line per criterion. Runs without the libtest harness so the
//! report is always printed; the process fails if any checked criterion fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use forgemorph_core::costmodel::{
    conv_pe_latency, dsp_total, estimate, lut_lookup, mac_core_counts, pool_pe_latency, stream_plan, LatencyTerms,
    PEAllocation, PeKind,
};
use forgemorph_core::distill::{cross_entropy, kd_grad, kd_loss, LogitVector};
use forgemorph_core::dse::{explore, ConstraintSet, DseError, GenomeBounds, MogaConfig};
use forgemorph_core::morph::{
    default_boundaries, fit_power_model, partition_blocks, read_calibration_csv, MorphableDesign,
};
use forgemorph_core::netgraph::{mnist_8_16_32, DeviceProfile, NetworkGraph, PoolKind, SequentialBuilder, Shape};
use forgemorph_core::streamsim::{simulate_conv_stream, simulate_pool_stream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(rel)
}

fn dev() -> DeviceProfile {
    DeviceProfile::zynq7100()
}

fn terms() -> LatencyTerms<f64> {
    LatencyTerms::for_device(&dev())
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_formula_anchors() -> Check {
    let mac = mac_core_counts(3);
    ensure(mac == (9, 8, 5), format!("mac_core_counts(3) = {mac:?}"))?;
    let conv = lut_lookup(PeKind::Conv, 3).map_err(|e| e.to_string())?;
    ensure(conv == (850, 2000), format!("conv LUT/reg = {conv:?}"))?;
    let pool = lut_lookup(PeKind::Pool, 3).map_err(|e| e.to_string())?;
    ensure(pool == (420, 1000), format!("pool LUT/reg = {pool:?}"))?;
    Ok("(9,8,5), conv (850,2000), pool (420,1000), exact".into())
}

fn c2_latency_oracle() -> Check {
    let t = terms();
    let mut cases = 0;
    for w in [8, 16, 28] {
        for h in [8, 16, 28] {
            for k in [2, 3] {
                for pad in [0, 1] {
                    let g = SequentialBuilder::new("one", Shape::new(w, h, 1))
                        .conv("c", 1, k, 1, pad)
                        .build()
                        .map_err(|e| e.to_string())?;
                    let layer = &g.layers()[g.conv_indices()[0]];
                    let sim = simulate_conv_stream(w, h, k, 1, pad, &t).map_err(|e| e.to_string())?;
                    let model = conv_pe_latency(layer, &t, true).map_err(|e| e.to_string())?;
                    let cycles = (model / t.clk_period).round() as u64;
                    ensure(
                        cycles == sim.cycles_total,
                        format!("{w}x{h} K={k} pad={pad}: model {cycles} vs sim {}", sim.cycles_total),
                    )?;
                    cases += 1;
                }
            }
        }
    }
    let g =
        SequentialBuilder::new("p", Shape::new(28, 28, 1)).max_pool("p", 2, 2).build().map_err(|e| e.to_string())?;
    let layer = g.layers().iter().find(|l| l.id == "p").expect("pool layer");
    let sim = simulate_pool_stream(28, 28, 2, 2, PoolKind::Max, &t).map_err(|e| e.to_string())?;
    let model = (pool_pe_latency(layer, &t, true).map_err(|e| e.to_string())? / t.clk_period).round() as u64;
    ensure(model == sim.cycles_total, format!("pool 28x28: model {model} vs sim {}", sim.cycles_total))?;
    Ok(format!("{cases} conv shapes + 28x28 max-pool, 0-cycle tolerance"))
}

fn c3_dsp_reproduction() -> Check {
    let g = mnist_8_16_32();
    let a = PEAllocation::new(vec![4, 8, 16], 8);
    let plan = stream_plan(&g, &a.mapping(&g), a.fc_pe).map_err(|e| e.to_string())?;
    let sum_l: u64 = g.conv_indices().iter().map(|&i| plan[i].pes).sum();
    let dsp = dsp_total(&g, &a).map_err(|e| e.to_string())?;
    ensure(sum_l == 164 && dsp == 1556, format!("ΣL = {sum_l}, dsp = {dsp}"))?;
    Ok("ΣL = 164, l = 8 gives dsp 1556, exact".into())
}

fn two_conv() -> NetworkGraph {
    SequentialBuilder::new("two", Shape::new(12, 12, 1))
        .conv("c1", 4, 3, 1, 1)
        .max_pool("p1", 2, 2)
        .conv("c2", 4, 3, 1, 1)
        .fc("fc", 10)
        .build()
        .expect("valid graph")
}

fn exhaustive_front(g: &NetworkGraph, cons: &ConstraintSet) -> BTreeSet<PEAllocation> {
    let t = terms();
    let pts: Vec<(PEAllocation, f64, u64)> = GenomeBounds::for_graph(g, Some(1))
        .enumerate()
        .into_iter()
        .filter_map(|a| {
            let e = estimate(g, &a, &dev(), &t).expect("in-bounds allocation");
            cons.is_satisfied(&e).then_some((a, e.latency_s, e.dsp))
        })
        .collect();
    pts.iter()
        .filter(|(_, l, d)| !pts.iter().any(|(_, l2, d2)| l2 <= l && d2 <= d && (l2 < l || d2 < d)))
        .map(|(a, _, _)| a.clone())
        .collect()
}

fn c4_brute_force_pareto() -> Check {
    let g = two_conv();
    let space = GenomeBounds::for_graph(&g, Some(1)).space_size();
    ensure(space == 16, format!("genome space has {space} points"))?;
    let cons = ConstraintSet::from_device(&dev());
    let truth = exhaustive_front(&g, &cons);
    for seed in [0, 1, 2, 3, 4] {
        let cfg = MogaConfig {
            population_size: 20,
            max_generations: 50,
            seed,
            fixed_fc_pe: Some(1),
            ..MogaConfig::default()
        };
        let front = explore(&g, &dev(), &terms(), &cons, &cfg).map_err(|e| e.to_string())?;
        let got: BTreeSet<PEAllocation> = front.entries.iter().map(|e| e.allocation.clone()).collect();
        ensure(got == truth, format!("seed {seed}: {} entries vs {} exhaustive", got.len(), truth.len()))?;
    }
    Ok(format!("{} exhaustive front points reproduced for seeds 0..5", truth.len()))
}

fn random_graph(rng: &mut ChaCha8Rng, idx: usize) -> NetworkGraph {
    let side = rng.random_range(6..=16);
    let mut b = SequentialBuilder::new(format!("rand{idx}"), Shape::new(side, side, rng.random_range(1..=3)));
    let convs = rng.random_range(1..=3);
    let mut s = side;
    for i in 0..convs {
        let k = rng.random_range(2..=3);
        b = b.conv(&format!("c{i}"), rng.random_range(1..=8), k, 1, 1);
        s = s + 2 - k + 1;
        if s >= 4 && rng.random_bool(0.5) {
            b = b.max_pool(&format!("p{i}"), 2, 2);
            s /= 2;
        }
    }
    b.fc("fc", rng.random_range(2..=10)).build().expect("generated graph is valid")
}

fn c5_constraint_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = terms();
    let (mut entries, mut infeasible) = (0, 0);
    for idx in 0..100 {
        let g = random_graph(&mut rng, idx);
        let lo = estimate(&g, &PEAllocation::ones(&g), &dev(), &t).map_err(|e| e.to_string())?;
        let hi = estimate(&g, &PEAllocation::full(&g), &dev(), &t).map_err(|e| e.to_string())?;
        let between = |rng: &mut ChaCha8Rng, a: u64, b: u64| rng.random_range(a..=b.max(a));
        let cons = ConstraintSet {
            max_latency_s: rng.random_bool(0.5).then(|| rng.random_range(hi.latency_s..=lo.latency_s)),
            max_dsp: Some(between(&mut rng, lo.dsp, hi.dsp)),
            max_lut: rng.random_bool(0.5).then(|| between(&mut rng, lo.lut, hi.lut)),
            max_bram: rng.random_bool(0.5).then(|| between(&mut rng, lo.bram, hi.bram)),
        };
        let cfg = MogaConfig { population_size: 16, max_generations: 20, seed: idx as u64, ..MogaConfig::default() };
        match explore(&g, &dev(), &t, &cons, &cfg) {
            Ok(front) => {
                for e in &front.entries {
                    ensure(cons.is_satisfied(&e.estimate), format!("graph {idx}: {} violates {cons:?}", e.allocation))?;
                }
                entries += front.entries.len();
            }
            Err(DseError::NoFeasibleDesign(_)) => {
                // Only legitimate when the latency bound excludes everything reachable.
                ensure(cons.max_latency_s.is_some(), format!("graph {idx}: NoFeasibleDesign under feasible budgets"))?;
            }
            Err(e) => return Err(format!("graph {idx}: {e}")),
        }

        let below = ConstraintSet { max_dsp: Some(lo.dsp.saturating_sub(1).max(1)), ..ConstraintSet::default() };
        match explore(&g, &dev(), &t, &below, &cfg) {
            Err(DseError::NoFeasibleDesign(_)) => infeasible += 1,
            other => {
                return Err(format!(
                    "graph {idx}: budget under the smallest design gave {:?}",
                    other.map(|f| f.entries.len())
                ))
            }
        }
    }
    Ok(format!("100 graphs, {entries} front entries all feasible, {infeasible} infeasible budgets rejected"))
}

fn c6_morph_monotonicity() -> Check {
    let g = mnist_8_16_32();
    let blocks = partition_blocks(&g, &default_boundaries(&g), 10).map_err(|e| e.to_string())?;
    ensure(blocks.len() == 3, format!("{} blocks", blocks.len()))?;
    let mut count = 0;
    for p1 in [2, 4, 8] {
        for p2 in [4, 8, 16] {
            for p3 in [8, 16, 32] {
                let alloc = PEAllocation::new(vec![p1, p2, p3], 32);
                let d = MorphableDesign::new(g.clone(), alloc.clone(), blocks.clone(), dev(), terms())
                    .map_err(|e| e.to_string())?;
                let lat: Vec<f64> = (1..=3)
                    .map(|k| d.depth_mode(k).map(|m| m.estimate.latency_s))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                ensure(lat.windows(2).all(|w| w[0] < w[1]), format!("{alloc}: depth latencies {lat:?}"))?;

                let m = d.width_mode(0.5).map_err(|e| e.to_string())?;
                ensure(m.active_widths == [4, 8, 16], format!("{alloc}: widths {:?}", m.active_widths))?;
                let full = stream_plan(&g, &alloc.mapping(&g), 32).map_err(|e| e.to_string())?;
                let ng = d.width_subgraph(0.5).map_err(|e| e.to_string())?;
                let narrow =
                    stream_plan(&ng, &m.active_alloc.mapping(&ng), m.active_alloc.fc_pe).map_err(|e| e.to_string())?;
                for &i in &g.conv_indices()[1..] {
                    ensure(
                        4 * narrow[i].pes <= full[i].pes,
                        format!("{alloc}: layer {i} keeps {} of {} PEs", narrow[i].pes, full[i].pes),
                    )?;
                }
                count += 1;
            }
        }
    }
    Ok(format!(
        "{count} allocations: depth latency strictly increasing, width 0.5 gives (4,8,16) and interior L <= 25%"
    ))
}

fn c7_power_fit() -> Check {
    let text = std::fs::read_to_string(data("calibration/mnist_power.csv")).map_err(|e| e.to_string())?;
    let samples = read_calibration_csv(text.as_bytes()).map_err(|e| e.to_string())?;
    let dsp: Vec<u64> = samples.iter().map(|s| s.dsp).collect();
    ensure(dsp == [1556, 485, 179, 35], format!("calibration rows {dsp:?}"))?;
    let m = fit_power_model::<f64>(&samples).map_err(|e| e.to_string())?;
    // Absolute floor for the exactly-determined 4-point fit, whose RMS is at rounding level.
    const FLOOR_MW: f64 = 1e-9;
    for s in &samples {
        let err = (m.predict(s.dsp, s.lut, s.bram) - s.measured_mw).abs();
        ensure(
            err <= 2.0 * m.fit_residual + FLOOR_MW,
            format!("dsp {}: error {err} mW, rms {}", s.dsp, m.fit_residual),
        )?;
    }
    let mut by_dsp = samples.clone();
    by_dsp.sort_by_key(|s| s.dsp);
    let pred: Vec<f64> = by_dsp.iter().map(|s| m.predict(s.dsp, s.lut, s.bram)).collect();
    ensure(pred.windows(2).all(|w| w[0] < w[1]), format!("predictions by DSP {pred:?}"))?;
    Ok(format!("rms {:.1e} mW, each point within 2x rms + {FLOOR_MW:e} mW, monotone in DSP", m.fit_residual))
}

fn c8_distill_numerics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = rng.random_range(2..=20);
        let tau = rng.random_range(0.5..10.0);
        let t: Vec<f64> = (0..c).map(|_| rng.random_range(-10.0..10.0)).collect();
        let s: Vec<f64> = (0..c).map(|_| rng.random_range(-10.0..10.0)).collect();
        let soft = |x: &[f64]| {
            let z: f64 = x.iter().map(|v| (v / tau).exp()).sum();
            x.iter().map(|v| (v / tau).exp() / z).collect::<Vec<_>>()
        };
        let (p, q) = (soft(&t), soft(&s));
        let mut kl = 0.0;
        for i in 0..c {
            kl += p[i] * (p[i] / q[i]).ln();
        }
        let want = tau * tau * kl;
        let got =
            kd_loss(&LogitVector::new(t).unwrap(), &LogitVector::new(s).unwrap(), tau).map_err(|e| e.to_string())?;
        let rel = (got - want).abs() / want.abs().max(1e-300);
        worst = worst.max(rel);
        ensure(rel <= 1e-9, format!("kd_loss {got} vs oracle {want} (rel {rel:e})"))?;
    }

    let h = 1e-5;
    let mut worst_grad = 0.0f64;
    for _ in 0..100 {
        let c = rng.random_range(2..=10);
        let tau = rng.random_range(0.5..8.0);
        let t = LogitVector::new((0..c).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        let s: Vec<f64> = (0..c).map(|_| rng.random_range(-5.0..5.0)).collect();
        let g = kd_grad(&t, &LogitVector::new(s.clone()).unwrap(), tau).map_err(|e| e.to_string())?;
        for i in 0..c {
            let at = |d: f64| {
                let mut v = s.clone();
                v[i] += d;
                kd_loss(&t, &LogitVector::new(v).unwrap(), tau).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            // Relative to the larger of |g| and 1e-3, so vanishing components are not divided by ~0.
            let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3);
            worst_grad = worst_grad.max(rel);
            ensure(rel <= 1e-5, format!("grad[{i}] analytic {} vs fd {fd}", g[i]))?;
        }
    }

    for c in [2usize, 10, 100, 1000] {
        let mut labels = vec![0.0; c];
        labels[0] = 1.0;
        let ce = cross_entropy(&labels, &LogitVector::new(vec![0.0; c]).unwrap()).map_err(|e| e.to_string())?;
        ensure((ce - (c as f64).ln()).abs() <= 1e-12, format!("CE uniform C={c}: {ce}"))?;
    }
    Ok(format!("KL worst rel {worst:.1e} <= 1e-9, grad worst rel {worst_grad:.1e} <= 1e-5, CE = ln C within 1e-12"))
}

fn run_explore(out: &Path, jobs: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_forgemorph"))
        .args(["explore", "--seed", "11", "--generations", "40", "--jobs", jobs, "--net"])
        .arg(data("networks/mnist_8_16_32.json"))
        .arg("--device")
        .arg(data("devices/zynq7100.json"))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), format!("explore exited with {}", status.status))
}

fn c10_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_explore(&a, "1")?;
    run_explore(&b, "0")?;
    for f in ["pareto.csv", "configs.json"] {
        let (x, y) = (
            std::fs::read(a.join(f)).map_err(|e| e.to_string())?,
            std::fs::read(b.join(f)).map_err(|e| e.to_string())?,
        );
        ensure(!x.is_empty() && x == y, format!("{f} differs between runs"))?;
    }
    Ok("pareto.csv and configs.json byte-identical across two runs (--jobs 1 vs all cores)".into())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "formula anchors", Duration::from_secs(1), c1_formula_anchors),
        (2, "latency oracle equivalence", Duration::from_secs(10), c2_latency_oracle),
        (3, "DSP arithmetic reproduction", Duration::from_secs(1), c3_dsp_reproduction),
        (4, "brute-force Pareto equivalence", Duration::from_secs(5), c4_brute_force_pareto),
        (5, "constraint soundness", Duration::from_secs(60), c5_constraint_soundness),
        (6, "morph monotonicity", Duration::from_secs(10), c6_morph_monotonicity),
        (7, "power-fit sanity", Duration::from_secs(1), c7_power_fit),
        (8, "distill numerics", Duration::from_secs(10), c8_distill_numerics),
        (10, "determinism", Duration::from_secs(60), c10_determinism),
    ];
    let mut failed = 0;
    for (n, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (verdict, detail) = match result {
            Ok(d) if took <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {took:?}, budget {budget:?}")),
            Err(e) => ("FAIL", e),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {verdict} [{:>8.3}s <= {:>4}s] {name}: {detail}",
            took.as_secs_f64(),
            budget.as_secs()
        );
        if n == 8 {
            println!(
                "criterion  9 NOT REPRODUCIBLE [stated] silicon latency/power, compiler comparisons, headline speedup \
                 and power claims, edge-device comparisons and trained accuracies are out of desk scope; \
                 criteria 1-8 stand in for them"
            );
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
