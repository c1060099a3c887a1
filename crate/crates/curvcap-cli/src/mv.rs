use std::path::PathBuf;

use serde::Serialize;

use curvcap::kernels::{mv_csv, mv_identity_report, MvReport};
use curvcap::plane::AtomicMeasure;

use crate::manifest::ManifestBuilder;
use crate::util::{read_json, write_text, CliError};

/// Track the transform-energy identity: for each truncation radius,
/// compare the L^2 norm of the truncated transform against one sixth of
/// the truncated curvature plus a mass-sized remainder.
#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Measure file (JSON).
    #[arg(long)]
    pub measure: PathBuf,
    /// Comma-separated truncation radii (positive).
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilon: Vec<f64>,
    /// Output CSV: epsilon,lhs,curv_term,remainder,mass.
    #[arg(long, default_value = "mv.csv")]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let measure: AtomicMeasure = read_json(&args.measure)?;
    let mut rows: Vec<MvReport> = Vec::with_capacity(args.epsilon.len());
    for &eps in &args.epsilon {
        rows.push(mv_identity_report(&measure, eps)?);
    }
    write_text(&args.out, &mv_csv(&rows))?;

    let mut manifest = ManifestBuilder::new("mv", args, 0)?;
    manifest.input(&args.measure)?;
    manifest.output(&args.out);
    manifest.write_next_to(&args.out)?;

    println!("epsilon       lhs           curv_term     remainder     mass");
    for r in &rows {
        println!(
            "{:<13.6} {:<13.6} {:<13.6} {:<13.6} {:<13.6}",
            r.epsilon, r.lhs, r.curvature_term, r.remainder, r.mass
        );
    }
    Ok(())
}
