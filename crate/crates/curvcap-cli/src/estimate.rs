use std::path::{Path, PathBuf};

use serde::Serialize;

use curvcap::capacity::{
    extremal_diagnostics, optimize_gplus, trace_csv, CapacityEstimate, ExtremalDiagnostics,
    OptimizeConfig,
};
use curvcap::plane::{cantor_set, AtomicMeasure};

use crate::manifest::ManifestBuilder;
use crate::util::{read_json, write_json, write_text, CliError};

/// Estimate capacity from below by optimizing the mass-vs-curvature
/// functional over admissible measures on the given support.
#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Measure file (JSON). Required unless --sweep is given.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Cantor-generation sweep `A..B` (inclusive): optimizes each
    /// generation and writes a CSV instead of a single-run report.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Curvature truncation; defaults to the measure's resolution.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Report path (JSON for a single run, CSV for a sweep). The single-run
    /// trace lands next to it with extension `trace.csv`.
    #[arg(long, default_value = "estimate.json")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EstimateReport {
    estimate: CapacityEstimate,
    diagnostics: ExtremalDiagnostics,
}

/// Evaluation budget by support size: the functional costs O(n^3) per
/// evaluation, so large supports get few, large steps.
fn config_for(len: usize, seed: u64, epsilon: Option<f64>) -> OptimizeConfig {
    let base = OptimizeConfig { seed, epsilon, ..OptimizeConfig::default() };
    if len >= 600 {
        OptimizeConfig { max_iters: 5, max_polish_evals: 4, ..base }
    } else if len >= 200 {
        OptimizeConfig { max_iters: 12, max_polish_evals: 10, ..base }
    } else {
        base
    }
}

fn parse_sweep(s: &str) -> Result<(u32, u32), CliError> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| CliError::input(format!("sweep must look like A..B, got {s:?}")))?;
    let lo: u32 = a
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("bad sweep start {a:?}")))?;
    let hi: u32 = b
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("bad sweep end {b:?}")))?;
    if lo > hi || hi > 8 {
        return Err(CliError::input("sweep range must satisfy A <= B <= 8"));
    }
    Ok((lo, hi))
}

fn run_sweep(args: &Args, lo: u32, hi: u32) -> Result<(), CliError> {
    let mut csv = String::from("n,g_value,mass,curvature,g_sqrt_n,converged\n");
    for n in lo..=hi {
        let support = cantor_set(n)?;
        let config = config_for(support.len(), args.seed, args.epsilon);
        let (est, _) = optimize_gplus(&support, &config)?;
        let g_sqrt_n = est.g_value * (n as f64).sqrt();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n, est.g_value, est.mass, est.curvature, g_sqrt_n, est.converged
        ));
        println!(
            "n={n}: g={:.6} mass={:.6} curvature={:.6} g*sqrt(n)={:.6}",
            est.g_value, est.mass, est.curvature, g_sqrt_n
        );
    }
    write_text(&args.out, &csv)?;
    let mut manifest = ManifestBuilder::new("estimate", args, args.seed)?;
    manifest.output(&args.out);
    manifest.write_next_to(&args.out)?;
    Ok(())
}

pub fn run(args: &Args) -> Result<(), CliError> {
    if let Some(sweep) = &args.sweep {
        let (lo, hi) = parse_sweep(sweep)?;
        return run_sweep(args, lo, hi);
    }
    let path: &Path = args
        .measure
        .as_deref()
        .ok_or_else(|| CliError::input("either --measure or --sweep is required"))?;
    let support: AtomicMeasure = read_json(path)?;
    let config = config_for(support.len(), args.seed, args.epsilon);
    let (est, trace) = optimize_gplus(&support, &config)?;
    let diagnostics = extremal_diagnostics(&est.sigma, est.epsilon)?;

    let trace_path = args.out.with_extension("trace.csv");
    write_json(&args.out, &EstimateReport { estimate: est.clone(), diagnostics })?;
    write_text(&trace_path, &trace_csv(&trace))?;

    let mut manifest = ManifestBuilder::new("estimate", args, args.seed)?;
    manifest.input(path)?;
    manifest.output(&args.out);
    manifest.output(&trace_path);
    manifest.write_next_to(&args.out)?;

    println!(
        "g={} mass={} curvature={} potential_min={} converged={}",
        est.g_value, est.mass, est.curvature, est.potential_min, est.converged
    );
    if !est.converged {
        return Err(CliError::unconverged(format!(
            "optimizer unconverged after {} iterations (results written to {})",
            est.iterations,
            args.out.display()
        )));
    }
    Ok(())
}
