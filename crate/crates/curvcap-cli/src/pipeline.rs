use std::path::PathBuf;

use serde::Serialize;

use curvcap::capacity::OptimizeConfig;
use curvcap::pipeline::{
    pipeline_svg, run_pipeline_stages, verify_first_main, PipelineArtifacts, PipelineConfig,
    PipelineState,
};
use curvcap::plane::SegmentFamily;
use curvcap::Error;

use crate::manifest::ManifestBuilder;
use crate::util::{read_json, write_json, write_text, CliError};

/// Run the segment-family construction end to end — extremal measure,
/// potential level set, Whitney decomposition, circle measures, and the
/// exceptional sets — then verify the structural inequalities of the run.
#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Segment family file (JSON).
    #[arg(long)]
    pub segments: PathBuf,
    /// Potential level defining the open set.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// Linear-growth constant of the non-Ahlfors scan.
    #[arg(long, default_value_t = 100.0)]
    pub c0: f64,
    /// Dominance factor of the degenerate-density squares.
    #[arg(long, default_value_t = 4.0)]
    pub cd: f64,
    /// Maximal-transform threshold; defaults to a data-driven value.
    #[arg(long)]
    pub alpha_s: Option<f64>,
    /// Raster cell size; defaults to a quarter of the extremal resolution.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional geometry dump.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Verification report path (JSON).
    #[arg(long, default_value = "pipeline.json")]
    pub out: PathBuf,
}

/// What a failed run leaves behind: the stage that failed and which stage
/// outputs were completed before it.
#[derive(Serialize)]
struct PartialReport {
    failed_stage: String,
    reason: String,
    completed: Vec<&'static str>,
}

fn completed_stages(st: &PipelineState) -> Vec<&'static str> {
    let mut done = Vec::new();
    if st.e_atoms.is_some() {
        done.push("discretize");
    }
    if st.estimate.is_some() {
        done.push("capacity-estimate");
    }
    if st.omega.is_some() {
        done.push("level-set");
    }
    if st.whitney.is_some() {
        done.push("whitney");
    }
    if st.f_indices.is_some() {
        done.push("select-squares");
    }
    if st.gamma_estimates.is_some() {
        done.push("local-capacity");
    }
    if st.nu0.is_some() {
        done.push("reference-measure");
    }
    if st.circles.is_some() {
        done.push("circle-measures");
    }
    if st.lattice.is_some() {
        done.push("lattice");
    }
    if st.h.is_some() {
        done.push("non-ahlfors-balls");
    }
    if st.hd.is_some() {
        done.push("ball-absorbing-squares");
    }
    if st.alpha_s.is_some() {
        done.push("transform-threshold");
    }
    if st.s.is_some() {
        done.push("high-transform-balls");
    }
    if st.td.is_some() {
        done.push("dominance-squares");
    }
    done
}

fn assemble(st: PipelineState) -> PipelineArtifacts {
    let whitney = st.whitney.expect("complete run");
    let f_indices = st.f_indices.expect("complete run");
    let f_squares = f_indices
        .iter()
        .map(|&i| whitney.squares[i].square)
        .collect();
    PipelineArtifacts {
        config: st.config,
        config_id: st.config_id,
        family: st.family,
        e_atoms: st.e_atoms.expect("complete run"),
        estimate: st.estimate.expect("complete run"),
        omega: st.omega.expect("complete run"),
        whitney,
        f_indices,
        f_squares,
        gamma_estimates: st.gamma_estimates.expect("complete run"),
        nu0: st.nu0.expect("complete run"),
        surrogate: st.surrogate.expect("complete run"),
        circles: st.circles.expect("complete run"),
        lattice: st.lattice.expect("complete run"),
        alpha_s: st.alpha_s.expect("complete run"),
        exceptional: curvcap::pipeline::ExceptionalSets {
            h: st.h.expect("complete run"),
            hd: st.hd.expect("complete run"),
            s: st.s.expect("complete run"),
            td: st.td.expect("complete run"),
        },
    }
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let family: SegmentFamily = read_json(&args.segments)?;
    let config = PipelineConfig {
        lambda: args.lambda,
        c0: args.c0,
        c_d: args.cd,
        alpha_s: args.alpha_s,
        rho: args.rho,
        estimator: OptimizeConfig { seed: args.seed, ..OptimizeConfig::default() },
        ..PipelineConfig::default()
    };

    let mut manifest = ManifestBuilder::new("pipeline", args, args.seed)?;
    manifest.input(&args.segments)?;

    let (state, outcome) = run_pipeline_stages(&family, &config);
    if let Err(e) = outcome {
        let (stage, reason) = match &e {
            Error::StageFailure { stage, reason } => (stage.to_string(), reason.clone()),
            other => ("unknown".to_string(), other.to_string()),
        };
        write_json(
            &args.out,
            &PartialReport {
                failed_stage: stage.clone(),
                reason,
                completed: completed_stages(&state),
            },
        )?;
        manifest.output(&args.out);
        manifest.write_next_to(&args.out)?;
        eprintln!("stage {stage} failed; partial report written to {}", args.out.display());
        return Err(e.into());
    }

    let artifacts = assemble(state);
    let report = verify_first_main(&artifacts).map_err(|e| Error::StageFailure {
        stage: "verify",
        reason: e.to_string(),
    })?;

    write_json(&args.out, &report)?;
    manifest.output(&args.out);
    if let Some(svg_path) = &args.svg {
        write_text(svg_path, &pipeline_svg(&artifacts))?;
        manifest.output(svg_path);
    }
    manifest.write_next_to(&args.out)?;

    for row in &report.rows {
        let mark = if row.kind == "record" {
            "record"
        } else if row.pass {
            "pass  "
        } else {
            "FAIL  "
        };
        println!("{mark} {:<40} lhs={:<12.6} rhs={:<12.6}", row.name, row.value_left, row.value_right);
    }
    Ok(())
}
