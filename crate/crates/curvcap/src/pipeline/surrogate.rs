use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::cauchy_truncated_real;
use crate::plane::segment::point_segment_dist;
use crate::plane::{discretize_segments, ComplexAtomicMeasure, Point, SegmentFamily};

/// How the reference measure was normalized.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SurrogateReport {
    /// Max of |C(arclength)| over the off-set evaluation grid.
    pub k_max: f64,
    /// Grid points that passed the exclusion-radius filter.
    pub grid_points: usize,
    pub exclusion_radius: f64,
    pub arclength: f64,
    /// Total mass after normalization: arclength / k_max.
    pub mass: f64,
}

/// Reference complex measure on a segment family: arclength discretized at
/// pitch `h`, rescaled by `1/K` where `K` is the max of `|C(arclength)|` over
/// an off-set grid. By construction the rescaled transform is bounded by 1 at
/// every grid sample, the discrete stand-in for the normalization a capacity
/// extremal would satisfy off the set.
///
/// Grid geometry is derived multiplicatively from the family's bounding box
/// (pad = diam/2, spacing = diam/64, exclusion radius = 2h), so dilating the
/// family and `h` together rescales the construction exactly.
pub fn surrogate_nu0(
    e: &SegmentFamily,
    h: f64,
) -> Result<(ComplexAtomicMeasure, SurrogateReport)> {
    let arc = discretize_segments(e, h)?;
    let segs = e.segments();
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(a, b) in segs {
        for p in [a, b] {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let diam = ((hi.x - lo.x).powi(2) + (hi.y - lo.y).powi(2)).sqrt();
    if !(diam > 0.0) {
        return Err(Error::invalid("segment family has zero extent"));
    }
    let pad = diam / 2.0;
    let spacing = diam / 64.0;
    let r_excl = 2.0 * h;
    let nx = (((hi.x - lo.x) + 2.0 * pad) / spacing).ceil() as usize + 1;
    let ny = (((hi.y - lo.y) + 2.0 * pad) / spacing).ceil() as usize + 1;
    let eps = r_excl / 2.0;
    let values: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            let z = Point::new(
                lo.x - pad + (i as f64 + 0.5) * spacing,
                lo.y - pad + (j as f64 + 0.5) * spacing,
            );
            let off_e = segs
                .iter()
                .all(|&(a, b)| point_segment_dist(z, a, b) >= r_excl);
            if !off_e {
                return None;
            }
            Some(
                cauchy_truncated_real(&arc, z, eps)
                    .expect("positive truncation")
                    .norm(),
            )
        })
        .collect();
    let mut k_max = 0.0f64;
    let mut grid_points = 0usize;
    for v in values.into_iter().flatten() {
        k_max = k_max.max(v);
        grid_points += 1;
    }
    if !(k_max > 0.0) {
        return Err(Error::invalid(
            "evaluation grid saw no off-set points; pitch too coarse",
        ));
    }
    let arclength = arc.mass();
    let atoms = arc
        .atoms()
        .iter()
        .map(|&(p, w)| (p, Complex64::new(w / k_max, 0.0)))
        .collect();
    let nu0 = ComplexAtomicMeasure::new(atoms, arc.resolution())?;
    let report = SurrogateReport {
        k_max,
        grid_points,
        exclusion_radius: r_excl,
        arclength,
        mass: arclength / k_max,
    };
    Ok((nu0, report))
}
