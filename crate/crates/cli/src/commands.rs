// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use forgemorph_core::costmodel::{estimate as estimate_cost, LatencyConfig, LatencyTerms, PEAllocation};
use forgemorph_core::distill::{build_schedule, DistillParams, ScheduleKind};
use forgemorph_core::dse::{
    explore as run_explore, read_front_csv, write_front_csv, ConstraintSet, FrontManifest, MogaConfig,
};
use forgemorph_core::morph::{
    default_boundaries, fit_power_model, partition_blocks, predict_power, read_calibration_csv, ModeSpec,
    MorphManifest, MorphableDesign, PowerModel,
};
use forgemorph_core::netgraph::{parse_network, DeviceProfile, LayerOp, NetworkGraph, PoolKind};
use forgemorph_core::streamsim::{simulate_conv_stream_traced, simulate_pool_stream_traced, write_trace_csv};
use log::info;

use crate::error::{CliError, CliResult};
use crate::run_manifest::{beside, read_input, write_file, RunManifest};
use crate::svg;
use crate::{
    CalibrateArgs, EstimateArgs, ExploreArgs, ModelInputs, MorphArgs, PoolArg, ReportArgs, ReportFormat, ScheduleArgs,
    ScheduleKindArg, SimulateArgs,
};

struct Model {
    graph: NetworkGraph,
    device: DeviceProfile,
    terms: LatencyTerms<f64>,
}

fn load_device(path: &Path, m: &mut RunManifest) -> CliResult<DeviceProfile> {
    let text = read_input(path, m)?;
    DeviceProfile::from_json(&text).map_err(|e| CliError::input(path.display(), e))
}

fn load_terms(path: Option<&Path>, dev: &DeviceProfile, m: &mut RunManifest) -> CliResult<LatencyTerms<f64>> {
    let cfg = match path {
        Some(p) => LatencyConfig::from_json(&read_input(p, m)?).map_err(|e| CliError::input(p.display(), e))?,
        None => LatencyConfig::default(),
    };
    let terms = cfg.resolve(dev)?;
    terms.check()?;
    Ok(terms)
}

fn load_net(path: &Path, m: &mut RunManifest) -> CliResult<NetworkGraph> {
    let text = read_input(path, m)?;
    parse_network(&text).map_err(|e| CliError::input(path.display(), e))
}

fn load_model(a: &ModelInputs, m: &mut RunManifest) -> CliResult<Model> {
    let graph = load_net(&a.net, m)?;
    let device = load_device(&a.device, m)?;
    let terms = load_terms(a.terms.as_deref(), &device, m)?;
    Ok(Model { graph, device, terms })
}

fn to_json<S: serde::Serialize>(v: &S) -> CliResult<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::internal("serialize", e))
}

pub fn explore(a: ExploreArgs) -> CliResult {
    let mut man = RunManifest::new("explore", Some(a.seed));
    let Model { graph, device, terms } = load_model(&a.model, &mut man)?;

    let mut cons = ConstraintSet::from_device(&device);
    cons.max_dsp = a.max_dsp.or(cons.max_dsp);
    cons.max_lut = a.max_lut.or(cons.max_lut);
    cons.max_bram = a.max_bram.or(cons.max_bram);
    cons.max_latency_s = a.max_latency_ms.map(|ms| ms * 1e-3);

    let mut cfg = MogaConfig::for_graph(&graph);
    cfg.seed = a.seed;
    cfg.max_generations = a.generations.unwrap_or(cfg.max_generations);
    cfg.population_size = a.population.unwrap_or(cfg.population_size);
    cfg.fixed_fc_pe = a.fc_pe;
    cfg.jobs = a.jobs;
    info!("exploring {} with {cfg:?} under {cons:?}", graph.name());

    let front = run_explore(&graph, &device, &terms, &cons, &cfg)?;
    if front.entries.is_empty() {
        return Err(CliError::Infeasible("NoFeasibleDesign: search archive is empty".into()));
    }

    let csv_path = a.out.join("pareto.csv");
    let mut csv = Vec::new();
    write_front_csv(&front, &mut csv).map_err(|e| CliError::internal("pareto.csv", e))?;
    write_file(&csv_path, &csv)?;

    let cfg_path = a.out.join("configs.json");
    let fm = FrontManifest { network: graph.to_document(), device, terms, constraints: cons, config: cfg, front };
    write_file(&cfg_path, format!("{}\n", fm.to_json()).as_bytes())?;

    man.output(&csv_path);
    man.output(&cfg_path);
    man.write(&a.out.join("manifest.json"))?;

    println!(
        "{} feasible designs ({} near-feasible) after {} generations, {} evaluations",
        fm.front.entries.len(),
        fm.front.near_feasible.len(),
        fm.front.generations_run,
        fm.front.evaluations
    );
    println!("{:>4}  {:<24} {:>14} {:>6} {:>8} {:>6}", "#", "allocation", "latency_s", "dsp", "lut", "bram");
    for (i, e) in fm.front.entries.iter().enumerate() {
        println!(
            "{i:>4}  {:<24} {:>14.6e} {:>6} {:>8} {:>6}",
            e.allocation.to_string(),
            e.estimate.latency_s,
            e.estimate.dsp,
            e.estimate.lut,
            e.estimate.bram
        );
    }
    Ok(())
}

fn parse_alloc(text: &str) -> Result<PEAllocation, String> {
    let t = text.trim();
    if t.starts_with('{') {
        serde_json::from_str(t).map_err(|e| e.to_string())
    } else {
        t.parse()
    }
}

pub fn estimate(a: EstimateArgs) -> CliResult {
    let mut man = RunManifest::new("estimate", None);
    let model = load_model(&a.model, &mut man)?;
    let alloc = match (&a.alloc.alloc, &a.alloc.alloc_file) {
        (Some(s), _) => parse_alloc(s).map_err(|e| CliError::input("--alloc", e))?,
        (None, Some(p)) => parse_alloc(&read_input(p, &mut man)?).map_err(|e| CliError::input(p.display(), e))?,
        (None, None) => return Err(CliError::Input("one of --alloc or --alloc-file is required".into())),
    };
    let e = estimate_cost(&model.graph, &alloc, &model.device, &model.terms)?;
    print!("{}", to_json(&e)?);
    Ok(())
}

fn class_count(g: &NetworkGraph) -> u64 {
    g.layers()
        .iter()
        .rev()
        .find_map(|l| match l.op {
            LayerOp::FullyConnected { fc_out, .. } => Some(fc_out),
            _ => None,
        })
        .unwrap_or_else(|| g.output_shape_of(g.layers().len() - 1).elements())
}

pub fn morph(a: MorphArgs) -> CliResult {
    let mut man = RunManifest::new("morph", None);
    let text = read_input(&a.config, &mut man)?;
    let fm = FrontManifest::<f64>::from_json(&text).map_err(|e| CliError::input(a.config.display(), e))?;
    let graph = fm.graph().map_err(|e| CliError::input(a.config.display(), e))?;
    let entry = fm.front.entries.get(a.entry).ok_or_else(|| {
        CliError::Input(format!("entry {} outside the front's {} entries", a.entry, fm.front.entries.len()))
    })?;
    let spec: ModeSpec = a.mode.parse()?;
    let cuts = a.boundaries.clone().unwrap_or_else(|| default_boundaries(&graph));
    let blocks = partition_blocks(&graph, &cuts, class_count(&graph))?;
    let design = MorphableDesign::new(graph, entry.allocation.clone(), blocks, fm.device.clone(), fm.terms.clone())?;
    let mut mode = design.mode(spec)?;
    if let Some(p) = &a.power_model {
        let pm =
            PowerModel::<f64>::from_json(&read_input(p, &mut man)?).map_err(|e| CliError::input(p.display(), e))?;
        mode.estimate = predict_power(&pm, &mode.estimate);
        mode.resident = predict_power(&pm, &mode.resident);
    }

    let mut out = if a.out.exists() {
        let existing = read_input(&a.out, &mut man)?;
        let m = MorphManifest::<f64>::from_json(&existing).map_err(|e| CliError::input(a.out.display(), e))?;
        if m.base_config != entry.allocation {
            return Err(CliError::Input(format!(
                "{} holds modes of {}, not {}",
                a.out.display(),
                m.base_config,
                entry.allocation
            )));
        }
        m
    } else {
        MorphManifest::new(entry.allocation.clone())
    };
    println!(
        "{}: latency {:.6e} s, dsp {}, active widths {:?}",
        mode.name, mode.estimate.latency_s, mode.estimate.dsp, mode.active_widths
    );
    out.upsert(mode);
    write_file(&a.out, format!("{}\n", out.to_json()).as_bytes())?;
    man.output(&a.out);
    man.write(&beside(&a.out))
}

pub fn calibrate(a: CalibrateArgs) -> CliResult {
    let mut man = RunManifest::new("calibrate", None);
    let text = read_input(&a.samples, &mut man)?;
    let samples = read_calibration_csv(text.as_bytes()).map_err(|e| CliError::input(a.samples.display(), e))?;
    let model = fit_power_model::<f64>(&samples)?;
    println!(
        "power_mw = {:.6} + {:.6e}·dsp + {:.6e}·lut + {:.6e}·bram (rms residual {:.3e} mW)",
        model.base_mw, model.coef_dsp, model.coef_lut, model.coef_bram, model.fit_residual
    );
    write_file(&a.out, format!("{}\n", model.to_json()).as_bytes())?;
    man.output(&a.out);
    man.write(&beside(&a.out))
}

pub fn simulate(a: SimulateArgs) -> CliResult {
    let mut man = RunManifest::new("simulate", None);
    let dev = match &a.device {
        Some(p) => load_device(p, &mut man)?,
        None => DeviceProfile::zynq7100(),
    };
    let terms = load_terms(a.terms.as_deref(), &dev, &mut man)?;
    let (trace, rows) = match a.pool {
        None => simulate_conv_stream_traced(a.width, a.height, a.kernel, a.stride, a.pad, &terms)?,
        Some(p) => {
            if a.pad != 0 {
                return Err(CliError::Input("pooling PEs take no padding".into()));
            }
            let kind = if p == PoolArg::Max { PoolKind::Max } else { PoolKind::Avg };
            simulate_pool_stream_traced(a.width, a.height, a.kernel, a.stride, kind, &terms)?
        }
    };
    print!("{}", to_json(&trace)?);
    if let Some(path) = &a.trace {
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf)?;
        write_file(path, &buf)?;
        man.output(path);
        man.write(&beside(path))?;
    }
    Ok(())
}

pub fn report(a: ReportArgs) -> CliResult {
    let mut man = RunManifest::new("report", None);
    let text = read_input(&a.front, &mut man)?;
    let rows = read_front_csv(text.as_bytes()).map_err(|e| CliError::input(a.front.display(), e))?;
    if rows.is_empty() {
        return Err(CliError::Input(format!("{} holds no front entries", a.front.display())));
    }
    let body = match a.format {
        ReportFormat::Svg => svg::render(&rows),
        ReportFormat::Csv => text,
    };
    write_file(&a.out, body.as_bytes())?;
    man.output(&a.out);
    man.write(&beside(&a.out))
}

pub fn schedule(a: ScheduleArgs) -> CliResult {
    let mut man = RunManifest::new("schedule", None);
    let graph = load_net(&a.net, &mut man)?;
    let cuts = a.boundaries.clone().unwrap_or_else(|| default_boundaries(&graph));
    let blocks = partition_blocks(&graph, &cuts, class_count(&graph))?;
    let params = DistillParams { lambda: a.lambda, tau: a.tau, epochs: a.epochs, ..DistillParams::default() };
    let kind = match a.kind {
        ScheduleKindArg::Depth => ScheduleKind::Depth,
        ScheduleKindArg::Width => ScheduleKind::Width(a.ladder.clone()),
    };
    let s = build_schedule(&graph, &blocks, &kind, &params)?;
    println!("{} stages", s.stages.len());
    write_file(&a.out, format!("{}\n", s.to_json()).as_bytes())?;
    man.output(&a.out);
    man.write(&beside(&a.out))
}
