use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jumpgeo::estimator::estimate_jumpset;
use jumpgeo::geometry::{hausdorff_report, hausdorff_to_truth};
use jumpgeo::harness::{
    run_oracle_suite, run_rate_sweep, run_topology_consistency, write_records_csv, ExperimentConfig, KnownMode,
    OracleSuiteConfig,
};
use jumpgeo::io::{self, GridEncoding};
use jumpgeo::model::{calibrate_kappa, CalibrationParams, CalibrationRequest, SnRule};
use jumpgeo::synth::{sample_to_grid, ShapeCatalogEntry, ShapeParams};
use jumpgeo::topology::{betti_estimate, diagrams};
use serde_json::json;

/// Frequencies a consistency run must reach for its checks to pass.
const FREQUENCY_TARGET: f64 = 0.9;
/// Allowed distance between the fitted slope and `1/d`.
const SLOPE_TOLERANCE: f64 = 0.15;

#[derive(Parser)]
#[command(name = "jumpgeo", version, about = "Jump-set estimation and topological inference on noisy grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a catalog shape on the N^d grid with Gaussian noise.
    Generate(GenerateArgs),
    /// Estimate the jump set of an observation file.
    Estimate(EstimateArgs),
    /// Hausdorff distance between two masks, or a mask and the true jump set.
    Metrics(MetricsArgs),
    /// Offset-filtration diagrams and Betti estimates of a mask.
    Topology(TopologyArgs),
    /// Hausdorff error against grid size, with a fitted rate.
    RateSweep(ExperimentArgs),
    /// Frequencies of correct Betti numbers, sandwich and diagram bounds.
    Consistency(ExperimentArgs),
    /// Cross-check fast routines against brute-force references.
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Binary,
    Csv,
}

#[derive(Args)]
struct GenerateArgs {
    /// two-circles, circle, half-space, half-space-ramp, pyramid or flat.
    #[arg(long, default_value = "two-circles")]
    shape: String,
    /// Full constructor parameters as JSON; overrides --shape, --d and --l.
    #[arg(long)]
    params: Option<String>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 4.0)]
    l: f64,
    /// Grid side length N.
    #[arg(long = "n", default_value_t = 256)]
    side: usize,
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "binary")]
    format: Format,
    /// Observation file; the ground truth goes to `<out>.truth.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    l: f64,
    /// Noise level; defaults to the one recorded in the file.
    #[arg(long, conflicts_with = "sigma_unknown")]
    sigma: Option<f64>,
    #[arg(long)]
    sigma_unknown: bool,
    #[arg(long, default_value_t = 1.0, conflicts_with = "mu_unknown")]
    mu: f64,
    #[arg(long)]
    mu_unknown: bool,
    /// Fixed value for the divergent sequence s_n instead of log n.
    #[arg(long)]
    s_n: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Mask output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    mask: PathBuf,
    /// Second mask.
    #[arg(long, conflicts_with = "truth", required_unless_present = "truth")]
    other: Option<PathBuf>,
    /// Ground-truth sidecar written by `generate`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct TopologyArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, required_unless_present = "auto_kappa")]
    kappa: Option<f64>,
    /// Use kappa = 2r/mu^2 (or s_n r when mu is unknown).
    #[arg(long, requires = "r")]
    auto_kappa: bool,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    s_n: Option<f64>,
    /// Also write diagram points as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated grid sizes.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    calibration_sigma: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    sigma_unknown: bool,
    #[arg(long)]
    mu_unknown: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "JUMPGEO_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "JUMPGEO_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(value)?) {
        // a closed pipe (`| head`) is not an error worth reporting
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn generate(args: GenerateArgs) -> Result<bool> {
    let params: ShapeParams = match &args.params {
        Some(text) => serde_json::from_str(text).context("parsing --params")?,
        None => ShapeParams::by_name(&args.shape, args.d, args.l)?,
    };
    let entry = params.build()?;
    let grid = sample_to_grid(&entry.spec, args.side, args.sigma, args.seed)?;
    let encoding = match args.format {
        Format::Binary => GridEncoding::F64Le,
        Format::Csv => GridEncoding::Csv,
    };
    io::save_grid(&args.out, &grid, encoding).with_context(|| format!("writing {}", args.out.display()))?;
    let sidecar = sidecar_path(&args.out);
    io::save_json(&sidecar, &entry.sidecar())?;
    print_json(&json!({
        "observations": args.out,
        "truth": sidecar,
        "shape": entry.spec.name,
        "N": args.side,
        "d": entry.spec.dim,
        "sigma": args.sigma,
        "seed": args.seed,
    }))?;
    Ok(true)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".truth.json");
    out.with_file_name(name)
}

fn estimate(args: EstimateArgs) -> Result<bool> {
    let grid = io::load_grid(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let sigma = if args.sigma_unknown {
        None
    } else {
        match args.sigma.or(grid.noise_sigma()) {
            Some(s) if s > 0.0 => Some(s),
            _ => bail!("no positive noise level given or recorded; pass --sigma or --sigma-unknown"),
        }
    };
    let request = CalibrationRequest {
        n: grid.len(),
        side: grid.side(),
        dim: grid.dim(),
        l: args.l,
        sigma,
        mu: (!args.mu_unknown).then_some(args.mu),
        s_n_rule: args.s_n.map_or(SnRule::LogN, SnRule::Fixed),
        h_override: args.h,
        r_override: args.r,
        kappa_override: None,
    };
    let params = CalibrationParams::calibrate(&request)?;
    let est = estimate_jumpset(&grid, &params)?;
    io::save_mask(&args.out, &est.mask)?;
    if est.mask.is_empty() {
        log::warn!("no cell reached the threshold; the estimated jump set is empty");
    }
    print_json(&json!({
        "mask": args.out,
        "cells_per_axis": est.mask.resolution(),
        "cells": est.mask.len(),
        "selected": est.mask.count(),
        "params": params,
    }))?;
    Ok(true)
}

fn metrics(args: MetricsArgs) -> Result<bool> {
    let mask = io::load_mask(&args.mask)?;
    let report = match (&args.other, &args.truth) {
        (Some(other), _) => hausdorff_report(&mask, &io::load_mask(other)?)?,
        (None, Some(truth)) => {
            let sidecar: serde_json::Value = io::load_json(truth)?;
            let entry = ShapeCatalogEntry::from_sidecar(&sidecar)?;
            hausdorff_to_truth(&mask, &entry.spec)?
        }
        (None, None) => unreachable!("clap requires one of --other and --truth"),
    };
    print_json(&serde_json::to_value(report)?)?;
    Ok(true)
}

fn topology(args: TopologyArgs) -> Result<bool> {
    let mask = io::load_mask(&args.mask)?;
    let kappa = match (args.kappa, args.auto_kappa) {
        (Some(k), false) => k,
        (_, true) => {
            let r = args.r.expect("clap enforces --r with --auto-kappa");
            let s_n = args.s_n.unwrap_or_else(|| (mask.len() as f64).ln());
            calibrate_kappa(r, args.mu, s_n)?
        }
        (None, false) => unreachable!("clap requires --kappa or --auto-kappa"),
    };
    let dgms = diagrams(&mask)?;
    let betti = betti_estimate(&dgms, kappa)?;
    let ties: usize = betti.iter().map(|b| b.ties).sum();
    if ties > 0 {
        eprintln!("note: {ties} class(es) die exactly at kappa and were counted as surviving");
    }
    if let Some(path) = &args.csv {
        io::write_diagrams_csv(&dgms, File::create(path)?)?;
    }
    let out = json!({ "kappa": kappa, "diagrams": dgms, "betti": betti });
    if let Some(path) = &args.out {
        io::save_json(path, &out)?;
    }
    print_json(&out)?;
    Ok(true)
}

fn experiment_config(args: &ExperimentArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config: ExperimentConfig = match &args.config {
        Some(path) => io::load_json(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if args.shape.is_some() || args.d.is_some() || args.l.is_some() {
        let name = args.shape.clone().unwrap_or_else(|| "two-circles".into());
        config.shape = ShapeParams::by_name(&name, args.d.unwrap_or(2), args.l.unwrap_or(4.0))?;
    }
    if let Some(n) = &args.n_values {
        config.n_values = n.clone();
    }
    if let Some(s) = args.sigma {
        config.sigma = s;
    }
    if args.calibration_sigma.is_some() {
        config.calibration_sigma = args.calibration_sigma;
    }
    if args.sigma_unknown {
        config.sigma_mode = KnownMode::Unknown;
    }
    if args.mu_unknown {
        config.mu_mode = KnownMode::Unknown;
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    if args.output_dir.is_some() {
        config.output_dir = args.output_dir.clone();
    }
    config.validate()?;
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok((config, dir))
}

fn rate_sweep(args: ExperimentArgs) -> Result<bool> {
    let (config, dir) = experiment_config(&args)?;
    let sweep = run_rate_sweep(&config)?;
    write_records_csv(&sweep.records, File::create(dir.join("rate_sweep.csv"))?)?;
    let target = 1.0 / config.shape.build()?.spec.dim as f64;
    let slope_ok = sweep.slope.map(|s| (s - target).abs() <= SLOPE_TOLERANCE);
    let summary = json!({
        "points": sweep.points,
        "slope": sweep.slope,
        "target_slope": target,
        "slope_ok": slope_ok,
        "empirical_constant": sweep.empirical_constant,
        "failed_trials": sweep.points.iter().map(|p| p.failed_trials).sum::<usize>(),
    });
    io::save_json(&dir.join("rate_sweep.json"), &summary)?;
    print_json(&summary)?;
    if slope_ok.is_none() {
        eprintln!("note: fewer than two grid sizes with results; slope undefined");
    }
    Ok(slope_ok != Some(false))
}

fn consistency(args: ExperimentArgs) -> Result<bool> {
    let (config, dir) = experiment_config(&args)?;
    let report = run_topology_consistency(&config)?;
    write_records_csv(&report.records, File::create(dir.join("consistency.csv"))?)?;
    let checks = &config.checks;
    let ok = report.points.iter().all(|p| {
        (!checks.betti || p.betti_match >= FREQUENCY_TARGET)
            && (!checks.sandwich || p.sandwich >= FREQUENCY_TARGET)
            && (!checks.bottleneck || p.bottleneck_within_bound.is_none_or(|f| f >= FREQUENCY_TARGET))
    });
    let summary = json!({
        "shape": report.shape,
        "expected_betti": report.expected_betti,
        "points": report.points,
        "notices": report.notices,
        "target_frequency": FREQUENCY_TARGET,
        "passed": ok,
    });
    io::save_json(&dir.join("consistency.json"), &summary)?;
    for notice in &report.notices {
        eprintln!("note: {notice}");
    }
    print_json(&summary)?;
    Ok(ok)
}

fn oracle_check(args: OracleArgs) -> Result<bool> {
    let mut config: OracleSuiteConfig = match &args.config {
        Some(path) => io::load_json(path)?,
        None => OracleSuiteConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let report = run_oracle_suite(&config);
    for c in &report.checks {
        println!(
            "{} {}: {} cases, {} failures, max error {:e}",
            if c.passed() { "ok  " } else { "FAIL" },
            c.name,
            c.cases,
            c.failures,
            c.max_error
        );
    }
    if let Some(dir) = &args.output_dir {
        fs::create_dir_all(dir)?;
        io::save_json(&dir.join("oracle_check.json"), &report)?;
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Estimate(a) => estimate(a),
        Command::Metrics(a) => metrics(a),
        Command::Topology(a) => topology(a),
        Command::RateSweep(a) => rate_sweep(a),
        Command::Consistency(a) => consistency(a),
        Command::OracleCheck(a) => oracle_check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
