// SPDX-License-Identifier: Apache-2.0

//! `forgemorph` command-line frontend.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod run_manifest;
mod svg;

#[derive(Debug, Parser)]
#[command(name = "forgemorph", version, about = "Design-space exploration and morphing for streaming CNN accelerators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search PE allocations and write the Pareto front.
    Explore(ExploreArgs),
    /// Print the cost estimate of one allocation as JSON.
    Estimate(EstimateArgs),
    /// Add a depth or width mode of a front entry to a morph manifest.
    Morph(MorphArgs),
    /// Fit the affine power model to measured samples.
    Calibrate(CalibrateArgs),
    /// Stream one frame through a single PE and print the cycle counts.
    Simulate(SimulateArgs),
    /// Render a front CSV as an SVG scatter, or pass it through as CSV.
    Report(ReportArgs),
    /// Emit the staged distillation schedule for external trainers.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Args)]
struct ModelInputs {
    /// Network description (JSON).
    #[arg(long)]
    net: PathBuf,
    /// Device profile (JSON).
    #[arg(long)]
    device: PathBuf,
    /// Latency term overrides (JSON); unset fields keep their defaults.
    #[arg(long)]
    terms: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExploreArgs {
    #[command(flatten)]
    model: ModelInputs,
    /// DSP budget; defaults to the device's.
    #[arg(long)]
    max_dsp: Option<u64>,
    #[arg(long)]
    max_lut: Option<u64>,
    /// BRAM budget in 18 Kb blocks.
    #[arg(long)]
    max_bram: Option<u64>,
    #[arg(long)]
    max_latency_ms: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Pin the FC PE count instead of searching it.
    #[arg(long)]
    fc_pe: Option<u64>,
    /// Evaluation threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory for pareto.csv, configs.json and manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "allocation", required = true, multiple = false)]
struct AllocSource {
    /// Allocation as `P1-P2-...:FC`, e.g. `4-8-16:8`.
    #[arg(long, group = "allocation")]
    alloc: Option<String>,
    /// File holding an allocation, either as `P1-P2-...:FC` or as JSON.
    #[arg(long, group = "allocation")]
    alloc_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelInputs,
    #[command(flatten)]
    alloc: AllocSource,
}

#[derive(Debug, Args)]
struct MorphArgs {
    /// configs.json written by `explore`.
    #[arg(long)]
    config: PathBuf,
    /// Index into the front's feasible entries.
    #[arg(long, default_value_t = 0)]
    entry: usize,
    /// `depth:K` or `width:F`.
    #[arg(long)]
    mode: String,
    /// Power model JSON from `calibrate`.
    #[arg(long)]
    power_model: Option<PathBuf>,
    /// Comma-separated layer ids that close each block; defaults to the stage-closing pools.
    #[arg(long, value_delimiter = ',')]
    boundaries: Option<Vec<String>>,
    /// Morph manifest to create or extend.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// CSV with columns dsp,lut,bram,measured_mw.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PoolArg {
    Max,
    Avg,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    width: u64,
    #[arg(long)]
    height: u64,
    #[arg(long)]
    kernel: u64,
    #[arg(long, default_value_t = 1)]
    stride: u64,
    #[arg(long, default_value_t = 0)]
    pad: u64,
    /// Simulate a pooling PE instead of a conv PE.
    #[arg(long)]
    pool: Option<PoolArg>,
    /// Device profile for the clock; the bundled Zynq-7100 profile otherwise.
    #[arg(long)]
    device: Option<PathBuf>,
    #[arg(long)]
    terms: Option<PathBuf>,
    /// Per-cycle trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Svg,
    Csv,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// pareto.csv written by `explore`.
    #[arg(long)]
    front: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Svg)]
    format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleKindArg {
    Depth,
    Width,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long, value_enum)]
    kind: ScheduleKindArg,
    /// Width fractions for `--kind width`, increasing and ending at 1.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.0")]
    ladder: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    boundaries: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 4.0)]
    tau: f64,
    #[arg(long, default_value_t = 10)]
    epochs: u32,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FORGEMORPH_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Explore(a) => commands::explore(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Morph(a) => commands::morph(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Report(a) => commands::report(a),
        Command::Schedule(a) => commands::schedule(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("forgemorph: {e}");
            e.code()
        }
    }
}
