//! Command-line front end for the curvature/capacity laboratory.
//!
//! Subcommands:
//! - `cantor`    generate a corner-Cantor measure file
//! - `estimate`  run the capacity-functional optimizer on a measure
//! - `mv`        tabulate the curvature/Cauchy-integral identity over cutoffs
//! - `pipeline`  run the packing pipeline on a segment family
//! - `tb`        run the random-lattice suite on a measure
//!
//! Exit codes: 0 success, 2 invalid input, 3 optimizer did not converge,
//! 4 pipeline stage failed, 5 paraaccretivity violated.

mod cantor;
mod estimate;
mod manifest;
mod mv;
mod pipeline;
mod tb;
mod util;

use clap::Parser;

#[derive(Parser)]
#[command(name = "curvcap", version, about = "curvature and capacity laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    Cantor(cantor::Args),
    Estimate(estimate::Args),
    Mv(mv::Args),
    Pipeline(pipeline::Args),
    Tb(tb::Args),
}

fn main() {
    let cli = Cli::parse();
    let outcome = util::init_threads().and_then(|()| match &cli.command {
        Command::Cantor(a) => cantor::run(a),
        Command::Estimate(a) => estimate::run(a),
        Command::Mv(a) => mv::run(a),
        Command::Pipeline(a) => pipeline::run(a),
        Command::Tb(a) => tb::run(a),
    });
    if let Err(e) = outcome {
        eprintln!("error: {}", e.msg);
        std::process::exit(e.code);
    }
}
