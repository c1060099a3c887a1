//! Constructive pipeline from a segment family to the circle measures and
//! exceptional sets: potential level set, Whitney decomposition, selected
//! squares, per-square capacity estimates, reference measure, circles, and
//! the four exceptional sets, with a verification report over the run.

pub mod circles;
pub mod exceptional;
pub mod partition;
pub mod raster;
pub mod surrogate;
pub mod svg;
pub mod verify;
pub mod vitushkin;
pub mod whitney;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{optimize_gplus, CapacityEstimate, OptimizeConfig};
use crate::error::{Error, Result};
use crate::kernels::cauchy_maximal;
use crate::plane::{
    discretize_segments, AtomicMeasure, ComplexAtomicMeasure, DyadicLattice, Point, SegmentFamily,
    Square,
};

pub use circles::{build_mu_nu, CircleInfo, CircleSystem};
pub use exceptional::{
    ahlfors_radius, build_h, build_hd, build_s, build_td, ExceptionalSets, HSet, HdSet,
    NonAhlforsBall, SPoint, SSet, TdSet, TdSquare,
};
pub use partition::{bump, partition_of_unity};
pub use raster::{level_set_omega, RasterOpenSet};
pub use surrogate::{surrogate_nu0, SurrogateReport};
pub use svg::pipeline_svg;
pub use verify::{square_mass_ratio_scan, verify_first_main, FirstMainReport, ReportRow};
pub use vitushkin::vitushkin_localize;
pub use whitney::{select_f, whitney, WhitneyDecomposition, WhitneySquare};

/// All knobs of one pipeline run. The level threshold is deliberately not
/// tied to the measured potential level (that inequality is a proof device);
/// the pair is recorded in the verification report instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Potential level defining the open set.
    pub lambda: f64,
    /// Linear-growth constant for the non-Ahlfors scan.
    pub c0: f64,
    /// Dominance factor for the degenerate-density squares.
    pub c_d: f64,
    /// Maximal-transform threshold; default 10x the median over circle atoms.
    pub alpha_s: Option<f64>,
    /// Raster cell size; default a quarter of the extremal measure's
    /// resolution.
    pub rho: Option<f64>,
    /// Segment discretization pitch; default shortest segment / 32.
    pub seg_step: Option<f64>,
    /// Settings for the global capacity estimate.
    pub estimator: OptimizeConfig,
    /// Settings for the per-square capacity estimates (small supports, so
    /// tighter evaluation caps).
    pub local_estimator: OptimizeConfig,
    pub lattice_translation: Point,
    /// Root exponent of the dyadic lattice; default sized from the data.
    pub lattice_root_exp: Option<i32>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lambda: 0.1,
            c0: 100.0,
            c_d: 4.0,
            alpha_s: None,
            rho: None,
            seg_step: None,
            estimator: OptimizeConfig::default(),
            local_estimator: OptimizeConfig {
                max_iters: 20,
                max_polish_evals: 40,
                ..OptimizeConfig::default()
            },
            lattice_translation: Point::new(0.0, 0.0),
            lattice_root_exp: None,
        }
    }
}

/// Stable identifier of a config snapshot, used to refuse mixing artifacts
/// from different runs.
pub fn config_digest(config: &PipelineConfig) -> Result<u64> {
    let json = serde_json::to_string(config)
        .map_err(|e| Error::invalid(format!("config not serializable: {e}")))?;
    let mut h = DefaultHasher::new();
    json.hash(&mut h);
    Ok(h.finish())
}

/// Stage outputs in completion order; every field is present once its stage
/// has run, so a failed run still exposes everything built before the
/// failure.
#[derive(Clone, Debug)]
pub struct PipelineState {
    pub config: PipelineConfig,
    pub config_id: u64,
    pub family: SegmentFamily,
    pub e_atoms: Option<AtomicMeasure>,
    pub estimate: Option<CapacityEstimate>,
    pub omega: Option<RasterOpenSet>,
    pub whitney: Option<WhitneyDecomposition>,
    pub f_indices: Option<Vec<usize>>,
    pub gamma_estimates: Option<Vec<f64>>,
    pub nu0: Option<ComplexAtomicMeasure>,
    pub surrogate: Option<SurrogateReport>,
    pub circles: Option<CircleSystem>,
    pub lattice: Option<DyadicLattice>,
    pub alpha_s: Option<f64>,
    pub h: Option<HSet>,
    pub hd: Option<HdSet>,
    pub s: Option<SSet>,
    pub td: Option<TdSet>,
}

/// A completed run.
#[derive(Clone, Debug)]
pub struct PipelineArtifacts {
    pub config: PipelineConfig,
    pub config_id: u64,
    pub family: SegmentFamily,
    pub e_atoms: AtomicMeasure,
    pub estimate: CapacityEstimate,
    pub omega: RasterOpenSet,
    pub whitney: WhitneyDecomposition,
    pub f_indices: Vec<usize>,
    pub f_squares: Vec<Square>,
    pub gamma_estimates: Vec<f64>,
    pub nu0: ComplexAtomicMeasure,
    pub surrogate: SurrogateReport,
    pub circles: CircleSystem,
    pub lattice: DyadicLattice,
    pub alpha_s: f64,
    pub exceptional: ExceptionalSets,
}

fn stage_err(stage: &'static str, e: Error) -> Error {
    match e {
        Error::StageFailure { .. } => e,
        other => Error::StageFailure {
            stage,
            reason: other.to_string(),
        },
    }
}

/// Runs the stages in order, recording each output; on failure returns the
/// partially filled state together with the stage error.
pub fn run_pipeline_stages(
    family: &SegmentFamily,
    config: &PipelineConfig,
) -> (PipelineState, Result<()>) {
    let config_id = match config_digest(config) {
        Ok(id) => id,
        Err(e) => {
            return (
                PipelineState {
                    config: config.clone(),
                    config_id: 0,
                    family: family.clone(),
                    e_atoms: None,
                    estimate: None,
                    omega: None,
                    whitney: None,
                    f_indices: None,
                    gamma_estimates: None,
                    nu0: None,
                    surrogate: None,
                    circles: None,
                    lattice: None,
                    alpha_s: None,
                    h: None,
                    hd: None,
                    s: None,
                    td: None,
                },
                Err(e),
            )
        }
    };
    let mut st = PipelineState {
        config: config.clone(),
        config_id,
        family: family.clone(),
        e_atoms: None,
        estimate: None,
        omega: None,
        whitney: None,
        f_indices: None,
        gamma_estimates: None,
        nu0: None,
        surrogate: None,
        circles: None,
        lattice: None,
        alpha_s: None,
        h: None,
        hd: None,
        s: None,
        td: None,
    };
    let res = drive(family, config, &mut st);
    (st, res)
}

fn drive(family: &SegmentFamily, config: &PipelineConfig, st: &mut PipelineState) -> Result<()> {
    // discretize
    let min_len = family
        .segments()
        .iter()
        .map(|&(a, b)| a.dist(b))
        .fold(f64::INFINITY, f64::min);
    let step = config.seg_step.unwrap_or(min_len / 32.0);
    let e_atoms =
        discretize_segments(family, step).map_err(|e| stage_err("discretize", e))?;
    st.e_atoms = Some(e_atoms.clone());

    // global capacity estimate; the extremal measure is the level-set field
    let (estimate, _) = optimize_gplus(&e_atoms, &config.estimator)
        .map_err(|e| stage_err("capacity-estimate", e))?;
    st.estimate = Some(estimate.clone());
    let sigma = &estimate.sigma;

    // level set of the potential
    let rho = config.rho.unwrap_or(sigma.resolution() / 4.0);
    let omega =
        level_set_omega(sigma, config.lambda, rho).map_err(|e| stage_err("level-set", e))?;
    if omega.is_empty() {
        return Err(Error::StageFailure {
            stage: "level-set",
            reason: "level set is empty; lower the threshold".into(),
        });
    }
    st.omega = Some(omega.clone());

    // Whitney decomposition
    let w = whitney(&omega);
    if w.is_empty() {
        return Err(Error::StageFailure {
            stage: "whitney",
            reason: "no square fits with its 20-dilate inside the set".into(),
        });
    }
    st.whitney = Some(w.clone());

    // squares whose doubled square meets the set atoms
    let f_indices = select_f(&w, &e_atoms);
    if f_indices.is_empty() {
        return Err(Error::StageFailure {
            stage: "select-squares",
            reason: "no square's 2-dilate meets the discretized set".into(),
        });
    }
    st.f_indices = Some(f_indices.clone());
    let f_squares: Vec<Square> = f_indices
        .iter()
        .map(|&i| w.squares[i].square)
        .collect();

    // per-square capacity estimates on the atoms inside each doubled square
    let gammas: Vec<Result<f64>> = f_squares
        .par_iter()
        .map(|sq| {
            let twoq = sq.dilate(2.0)?;
            let atoms: Vec<(Point, f64)> = e_atoms
                .atoms()
                .iter()
                .copied()
                .filter(|&(p, _)| twoq.contains(p))
                .collect();
            let local = AtomicMeasure::new(atoms, e_atoms.resolution())?;
            let (est, _) = optimize_gplus(&local, &config.local_estimator)?;
            Ok(est.g_value)
        })
        .collect();
    let mut gamma_estimates = Vec::with_capacity(gammas.len());
    for g in gammas {
        gamma_estimates.push(g.map_err(|e| stage_err("local-capacity", e))?);
    }
    st.gamma_estimates = Some(gamma_estimates.clone());

    // reference measure on the segments
    let (nu0, surrogate) =
        surrogate_nu0(family, step).map_err(|e| stage_err("reference-measure", e))?;
    st.nu0 = Some(nu0.clone());
    st.surrogate = Some(surrogate);

    // circle measures
    let circles = build_mu_nu(&f_squares, &e_atoms, &nu0, &gamma_estimates)
        .map_err(|e| stage_err("circle-measures", e))?;
    st.circles = Some(circles.clone());

    // dyadic lattice sized to the data
    let lattice = match config.lattice_root_exp {
        Some(n) => DyadicLattice::new(n, config.lattice_translation),
        None => auto_lattice(config, &omega, &circles.mu),
    }
    .map_err(|e| stage_err("lattice", e))?;
    st.lattice = Some(lattice);

    // exceptional sets
    let h = build_h(&circles.mu, config.c0).map_err(|e| stage_err("non-ahlfors-balls", e))?;
    st.h = Some(h.clone());
    let hd = build_hd(&h, &lattice).map_err(|e| stage_err("ball-absorbing-squares", e))?;
    st.hd = Some(hd.clone());

    let alpha_s = match config.alpha_s {
        Some(a) => a,
        None => {
            let mut stars: Vec<f64> = circles
                .mu
                .atoms()
                .par_iter()
                .map(|&(x, _)| cauchy_maximal(&circles.nu, x))
                .collect();
            stars.sort_by(f64::total_cmp);
            let med = if stars.is_empty() {
                0.0
            } else {
                let n = stars.len();
                if n % 2 == 1 {
                    stars[n / 2]
                } else {
                    0.5 * (stars[n / 2 - 1] + stars[n / 2])
                }
            };
            if !(med > 0.0) {
                return Err(Error::StageFailure {
                    stage: "transform-threshold",
                    reason: "median maximal transform vanishes; set the threshold explicitly"
                        .into(),
                });
            }
            10.0 * med
        }
    };
    st.alpha_s = Some(alpha_s);

    let s = build_s(&circles.nu, &circles.mu, alpha_s)
        .map_err(|e| stage_err("high-transform-balls", e))?;
    st.s = Some(s.clone());
    let td = build_td(&circles.mu, &circles.nu, &lattice, config.c_d)
        .map_err(|e| stage_err("dominance-squares", e))?;
    st.td = Some(td.clone());
    Ok(())
}

/// Smallest root exponent whose root square holds the level-set grid, the
/// circle atoms, and every ball the absorbing stage can produce, with an
/// extra octave of slack.
fn auto_lattice(
    config: &PipelineConfig,
    omega: &RasterOpenSet,
    mu: &AtomicMeasure,
) -> Result<DyadicLattice> {
    let t = config.lattice_translation;
    let mut extent = 0.0f64;
    let (lo, hi) = omega.grid_bbox();
    for p in [lo, hi] {
        extent = extent.max((p.x - t.x).abs()).max((p.y - t.y).abs());
    }
    for &(p, _) in mu.atoms() {
        extent = extent.max((p.x - t.x).abs()).max((p.y - t.y).abs());
    }
    // margin for 5R-dilated balls: every critical radius is at most mass/c0
    extent += 5.0 * mu.mass() / config.c0;
    let n = extent.log2().ceil() as i32 + 1;
    DyadicLattice::new(n, t)
}

pub fn run_pipeline(
    family: &SegmentFamily,
    config: &PipelineConfig,
) -> Result<PipelineArtifacts> {
    let (st, res) = run_pipeline_stages(family, config);
    res?;
    let w = st.whitney.expect("complete run");
    let f_indices = st.f_indices.expect("complete run");
    let f_squares = f_indices.iter().map(|&i| w.squares[i].square).collect();
    Ok(PipelineArtifacts {
        config: st.config,
        config_id: st.config_id,
        family: st.family,
        e_atoms: st.e_atoms.expect("complete run"),
        estimate: st.estimate.expect("complete run"),
        omega: st.omega.expect("complete run"),
        whitney: w,
        f_indices,
        f_squares,
        gamma_estimates: st.gamma_estimates.expect("complete run"),
        nu0: st.nu0.expect("complete run"),
        surrogate: st.surrogate.expect("complete run"),
        circles: st.circles.expect("complete run"),
        lattice: st.lattice.expect("complete run"),
        alpha_s: st.alpha_s.expect("complete run"),
        exceptional: ExceptionalSets {
            h: st.h.expect("complete run"),
            hd: st.hd.expect("complete run"),
            s: st.s.expect("complete run"),
            td: st.td.expect("complete run"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> PipelineConfig {
        PipelineConfig {
            lambda: 0.2,
            seg_step: Some(1.0 / 16.0),
            estimator: OptimizeConfig {
                max_iters: 8,
                max_polish_evals: 8,
                ..OptimizeConfig::default()
            },
            local_estimator: OptimizeConfig {
                max_iters: 6,
                max_polish_evals: 6,
                ..OptimizeConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    fn unit_segment() -> SegmentFamily {
        SegmentFamily::new(vec![(Point::new(0.0, 0.0), Point::new(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn unit_segment_run_completes_with_consistent_artifacts() {
        let art = run_pipeline(&unit_segment(), &tiny_config()).unwrap();
        assert!(!art.f_squares.is_empty());
        assert_eq!(art.f_squares.len(), art.gamma_estimates.len());
        assert_eq!(art.f_squares.len(), art.circles.circles.len());
        assert!(art.gamma_estimates.iter().all(|&g| g > 0.0));
        // mass conservation through the partition of unity
        let err = (art.circles.nu.total() - art.nu0.total()).norm();
        assert!(
            err <= 1e-10 * art.nu0.total().norm(),
            "conservation error {err}"
        );
        // every set atom is covered by a selected square's doubled square
        for &(p, _) in art.e_atoms.atoms() {
            assert!(art
                .f_squares
                .iter()
                .any(|sq| sq.dilate(2.0).unwrap().contains(p)));
        }
        assert!(art.alpha_s > 0.0);
        // structural exceptional-set bounds
        let exc = &art.exceptional;
        assert!(exc.h.sum_radii <= art.circles.mu.mass() / art.config.c0 * (1.0 + 1e-9));
        assert!(exc.hd.sum_sides <= 80.0 * exc.h.sum_radii * (1.0 + 1e-9));
        // the absorbing squares contain the dilated balls' centers
        for b in &exc.h.dilated {
            assert!(exc.hd.contains(b.center));
        }
    }

    #[test]
    fn config_digest_tracks_content() {
        let a = tiny_config();
        let mut b = a.clone();
        assert_eq!(config_digest(&a).unwrap(), config_digest(&b).unwrap());
        b.lambda = 0.3;
        assert_ne!(config_digest(&a).unwrap(), config_digest(&b).unwrap());
    }

    #[test]
    fn failed_stage_reports_its_name_and_keeps_partials() {
        // an absurd threshold empties the level set at the level-set stage
        let mut cfg = tiny_config();
        cfg.lambda = 1e9;
        let (st, res) = run_pipeline_stages(&unit_segment(), &cfg);
        match res {
            Err(Error::StageFailure { stage, .. }) => assert_eq!(stage, "level-set"),
            other => panic!("expected stage failure, got {other:?}"),
        }
        assert!(st.e_atoms.is_some());
        assert!(st.estimate.is_some());
        assert!(st.whitney.is_none());
    }
}
