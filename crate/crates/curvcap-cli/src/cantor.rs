use std::path::PathBuf;

use serde::Serialize;

use curvcap::plane::cantor_set;

use crate::manifest::ManifestBuilder;
use crate::util::{write_json, CliError};

/// Write the planar quarter-Cantor measure of one generation.
#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Generation (0..=8); generation n carries 4^n atoms of total mass 1.
    #[arg(long)]
    pub n: u32,
    /// Output measure file.
    #[arg(long, default_value = "cantor.json")]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let measure = cantor_set(args.n)?;
    write_json(&args.out, &measure)?;
    let mut manifest = ManifestBuilder::new("cantor", args, 0)?;
    manifest.output(&args.out);
    manifest.write_next_to(&args.out)?;
    println!(
        "cantor generation {}: {} atoms, mass {}",
        args.n,
        measure.len(),
        measure.mass()
    );
    Ok(())
}
