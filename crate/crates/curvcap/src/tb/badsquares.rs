//! Bad-square test between two dyadic lattices and its Monte-Carlo
//! probability estimate over random lattice translations.
//!
//! A square `Q` of the first lattice is *bad* relative to the second lattice
//! when either
//!
//! (a) some square `R` of the second lattice with `side(R) >= 2^m side(Q)`
//!     has `dist(Q, boundary R) <= 16 side(Q)^{1/4} side(R)^{3/4}`, or
//!
//! (b) some square `R` of the second lattice with
//!     `side(R) >= 2^{1-m} side(Q)` is contained in the concentric dilate
//!     `(2^{m+2} + 1) Q` and has a boundary that is not mass-negligible:
//!     there is a radius `r` with `mu{ dist(., boundary R) <= r } > M r`.
//!
//! Both conditions are decided exactly for atomic measures: (a) reduces to
//! distances between the square and the grid lines of each level, and the
//! negligibility in (b) only needs to be checked at the finitely many radii
//! where the cumulative mass jumps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::plane::{AtomicMeasure, DyadicLattice, DyadicSquare, Point};
use crate::tb::lattice::random_lattice;

/// Outcome of the bad-square test, with the condition that fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadVerdict {
    pub bad: bool,
    /// `"grid-proximity"` for condition (a), `"heavy-boundary"` for (b).
    pub reason: Option<&'static str>,
}

impl BadVerdict {
    fn good() -> Self {
        BadVerdict { bad: false, reason: None }
    }

    fn bad(reason: &'static str) -> Self {
        BadVerdict { bad: true, reason: Some(reason) }
    }
}

/// Proximity threshold `16 side(Q)^{1/4} side(R)^{3/4}` of condition (a).
pub fn proximity_threshold(side_q: f64, side_r: f64) -> f64 {
    16.0 * side_q.powf(0.25) * side_r.powf(0.75)
}

/// Euclidean distance from the interval `[lo, hi]` to the grid
/// `{ origin + k * spacing : k integer }`; zero when the interval crosses or
/// touches a grid point.
fn interval_grid_dist(lo: f64, hi: f64, origin: f64, spacing: f64) -> f64 {
    let t0 = ((lo - origin) / spacing).floor();
    let t1 = ((hi - origin) / spacing).floor();
    if t0 < t1 {
        return 0.0;
    }
    let left = (lo - origin) - t0 * spacing;
    let right = (t0 + 1.0) * spacing - (hi - origin);
    left.min(right).max(0.0)
}

/// True when the closed square `inner` lies inside the closed square
/// centered at `center` with side `side`.
fn square_inside(inner: crate::plane::Square, center: Point, side: f64) -> bool {
    let slack = (side - inner.side) * 0.5;
    slack >= 0.0
        && (inner.center.x - center.x).abs() <= slack
        && (inner.center.y - center.y).abs() <= slack
}

/// True when the boundary of `cell` fails the `M`-negligibility bound
/// `mu{ dist(., boundary) <= r } <= boundary_m * r` at some radius.
///
/// The supremum of `mu{...} - M r` over `r` is attained at a jump of the
/// cumulative mass, so it suffices to test the sorted atom distances.
fn boundary_is_heavy(cell: crate::plane::Square, mu: &AtomicMeasure, boundary_m: f64) -> bool {
    let r_max = mu.mass() / boundary_m;
    let mut dists: Vec<(f64, f64)> = mu
        .atoms()
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|&(p, w)| (cell.boundary_dist(p), w))
        .filter(|(d, _)| *d <= r_max)
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    let mut i = 0;
    while i < dists.len() {
        let d = dists[i].0;
        while i < dists.len() && dists[i].0 == d {
            cum += dists[i].1;
            i += 1;
        }
        if cum > boundary_m * d {
            return true;
        }
    }
    false
}

/// Decides whether `q` (a square of `lat1`) is bad relative to `lat2`.
///
/// `m >= 1` is the scale gap and `boundary_m` the negligibility constant.
/// The test assumes `q` lies inside the root of `lat2`; candidate squares
/// for condition (b) are enumerated from the atoms of `mu`, which is
/// exhaustive because a non-negligible boundary must pass within
/// `mass / boundary_m` of some atom.
pub fn is_bad(
    q: DyadicSquare,
    lat1: &DyadicLattice,
    lat2: &DyadicLattice,
    mu: &AtomicMeasure,
    m: u32,
    boundary_m: f64,
) -> Result<BadVerdict> {
    if m < 1 || m > 40 {
        return Err(Error::invalid("scale gap m must lie in 1..=40"));
    }
    if !(boundary_m > 0.0 && boundary_m.is_finite()) {
        return Err(Error::invalid("boundary constant must be positive"));
    }
    if !q.is_descendant_of(lat1.root()) {
        return Err(Error::invalid("square does not belong to the first lattice"));
    }

    let qs = lat1.to_square(q);
    let q_lo = qs.corner_lo();
    let q_hi = qs.corner_hi();
    let o2 = lat2.origin();

    // Condition (a): distance to the grid lines of every coarse level.
    let lo_a = (q.level + m as i32).max(lat2.min_level());
    for level in lo_a..=lat2.root_level() {
        let spacing = (level as f64).exp2();
        let dx = interval_grid_dist(q_lo.x, q_hi.x, o2.x, spacing);
        let dy = interval_grid_dist(q_lo.y, q_hi.y, o2.y, spacing);
        if dx.min(dy) <= proximity_threshold(qs.side, spacing) {
            return Ok(BadVerdict::bad("grid-proximity"));
        }
    }

    // Condition (b): heavy boundaries of nearby squares. Only levels whose
    // squares can fit inside the dilate need checking.
    if mu.mass() <= 0.0 {
        return Ok(BadVerdict::good());
    }
    let dilate_factor = ((1u64 << (m + 2)) + 1) as f64;
    let big_side = qs.side * dilate_factor;
    let r_max = mu.mass() / boundary_m;
    let lo_b = (q.level + 1 - m as i32).max(lat2.min_level());
    let hi_b = (q.level + m as i32 + 2).min(lat2.root_level());
    let root2 = lat2.root();
    for level in lo_b..=hi_b {
        let spacing = (level as f64).exp2();
        let window = (r_max / spacing).ceil() as i64 + 1;
        let mut candidates: HashSet<(i64, i64)> = HashSet::new();
        for &(p, w) in mu.atoms() {
            if w <= 0.0 {
                continue;
            }
            let cx = ((p.x - o2.x) / spacing).floor() as i64;
            let cy = ((p.y - o2.y) / spacing).floor() as i64;
            for ix in cx - window..=cx + window {
                for iy in cy - window..=cy + window {
                    candidates.insert((ix, iy));
                }
            }
        }
        let mut cells: Vec<(i64, i64)> = candidates.into_iter().collect();
        cells.sort_unstable();
        for (kx, ky) in cells {
            let cell = DyadicSquare { level, kx, ky };
            if !cell.is_descendant_of(root2) {
                continue;
            }
            let cs = lat2.to_square(cell);
            if !square_inside(cs, qs.center, big_side) {
                continue;
            }
            if boundary_is_heavy(cs, mu, boundary_m) {
                return Ok(BadVerdict::bad("heavy-boundary"));
            }
        }
    }
    Ok(BadVerdict::good())
}

pub const MC_CSV_HEADER: &str = "trial,seed,w_x,w_y,observable";

/// One Monte-Carlo trial: the lattice translation drawn and the observable
/// (1 when the square came out bad, 0 otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub trial: u64,
    pub seed: u64,
    pub w_x: f64,
    pub w_y: f64,
    pub observable: f64,
}

impl McRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.trial, self.seed, self.w_x, self.w_y, self.observable
        )
    }
}

/// Monte-Carlo estimate of the bad-square probability with a Wilson 95%
/// confidence interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: u32,
    pub hits: u32,
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub rows: Vec<McRow>,
}

impl McEstimate {
    pub fn csv(&self) -> String {
        let mut out = String::from(MC_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

fn wilson_interval(hits: u32, trials: u32) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z = 1.959_963_984_540_054_f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Estimates the probability that `q` is bad relative to a random dyadic
/// lattice with size exponent `n`, over `trials >= 100` independent
/// translations drawn from the keyed streams of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn bad_probability_mc(
    q: DyadicSquare,
    lat1: &DyadicLattice,
    mu: &AtomicMeasure,
    n: i32,
    m: u32,
    boundary_m: f64,
    trials: u32,
    seed: u64,
) -> Result<McEstimate> {
    if trials < 100 {
        return Err(Error::invalid("probability estimate needs at least 100 trials"));
    }
    let positions: Vec<Point> = mu.atoms().iter().map(|&(p, _)| p).collect();
    let rows: Vec<McRow> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let rl = random_lattice(seed, trial, n, &positions)?;
            let verdict = is_bad(q, lat1, &rl.lattice, mu, m, boundary_m)?;
            Ok(McRow {
                trial,
                seed,
                w_x: rl.w.x,
                w_y: rl.w.y,
                observable: if verdict.bad { 1.0 } else { 0.0 },
            })
        })
        .collect::<Result<_>>()?;
    let hits = rows.iter().filter(|r| r.observable == 1.0).count() as u32;
    let fraction = hits as f64 / trials as f64;
    let (ci_lo, ci_hi) = wilson_interval(hits, trials);
    Ok(McEstimate { trials, hits, fraction, ci_lo, ci_hi, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_measure() -> AtomicMeasure {
        AtomicMeasure::new(vec![], 1e-6).unwrap()
    }

    #[test]
    fn threshold_matches_the_unit_to_four_example() {
        let thr = proximity_threshold(1.0, 4.0);
        assert!((thr - 45.254833995939045).abs() < 1e-12);
        // distance 50 stays clear of the threshold, distance 40 does not
        assert!(50.0 > thr);
        assert!(40.0 <= thr);
    }

    #[test]
    fn grid_distance_is_exact_on_and_off_lines() {
        // interval [2, 3] against spacing-4 lines through 0.25:
        // nearest lines are 0.25 and 4.25, so min(2 - 0.25, 4.25 - 3) = 1.25
        let d = interval_grid_dist(2.0, 3.0, 0.25, 4.0);
        assert!((d - 1.25).abs() < 1e-12);
        // straddling a line gives zero
        assert_eq!(interval_grid_dist(-1.0, 1.0, 0.0, 4.0), 0.0);
        // touching a line gives zero
        assert_eq!(interval_grid_dist(4.0, 5.0, 0.0, 4.0), 0.0);
    }

    #[test]
    fn aligned_lattices_are_bad_by_grid_proximity() {
        let lat = DyadicLattice::new(3, Point::new(0.0, 0.0)).unwrap();
        let q = lat.locate(Point::new(0.5, 0.5), 0).unwrap();
        let v = is_bad(q, &lat, &lat, &empty_measure(), 1, 10.0).unwrap();
        assert!(v.bad);
        assert_eq!(v.reason, Some("grid-proximity"));
    }

    #[test]
    fn empty_measure_and_no_coarse_levels_is_never_bad() {
        // scale gap larger than the whole lattice: condition (a) has no
        // qualifying level, and (b) cannot fire without mass
        let lat1 = DyadicLattice::new(3, Point::new(0.0, 0.0)).unwrap();
        let lat2 = DyadicLattice::new(3, Point::new(0.37, -0.21)).unwrap();
        let q = lat1.locate(Point::new(0.5, 0.5), 0).unwrap();
        let v = is_bad(q, &lat1, &lat2, &empty_measure(), 20, 10.0).unwrap();
        assert!(!v.bad);
        assert_eq!(v.reason, None);
    }

    #[test]
    fn heavy_boundary_mass_trips_the_second_condition_at_exact_breakpoints() {
        // q = [0,4)^2 at level 2; the second lattice is offset by 0.25 so its
        // level-2 square [0.25, 4.25)^2 has a wall at x = 0.25. One atom of
        // mass 0.5 sits 2^-10 to the right of that wall. With m = 4 condition
        // (a) has no qualifying level (root level is 5 < 2 + 4).
        let lat1 = DyadicLattice::new(4, Point::new(0.0, 0.0)).unwrap();
        let lat2 = DyadicLattice::new(4, Point::new(0.25, 0.25)).unwrap();
        let q = lat1.locate(Point::new(2.0, 2.0), 2).unwrap();
        let d = 0.0009765625; // 2^-10, exactly representable
        let mu = AtomicMeasure::new(vec![(Point::new(0.25 + d, 2.0), 0.5)], 1e-6).unwrap();

        let v = is_bad(q, &lat1, &lat2, &mu, 4, 10.0).unwrap();
        assert!(v.bad);
        assert_eq!(v.reason, Some("heavy-boundary"));

        // the breakpoint is exact: mass 0.5 at distance 2^-10 violates
        // M-negligibility iff 0.5 > M * 2^-10, i.e. iff M < 512
        let just_bad = is_bad(q, &lat1, &lat2, &mu, 4, 511.0).unwrap();
        assert!(just_bad.bad);
        let not_bad = is_bad(q, &lat1, &lat2, &mu, 4, 512.0).unwrap();
        assert!(!not_bad.bad);
    }

    #[test]
    fn monte_carlo_replays_exactly_and_orders_its_interval() {
        let lat1 = DyadicLattice::new(4, Point::new(0.0, 0.0)).unwrap();
        let q = lat1.locate(Point::new(2.0, 2.0), 2).unwrap();
        let mu = AtomicMeasure::new(
            vec![
                (Point::new(0.3, 0.7), 0.25),
                (Point::new(-0.52, 0.11), 0.25),
                (Point::new(0.05, -0.83), 0.25),
                (Point::new(-0.7, -0.44), 0.25),
            ],
            1e-6,
        )
        .unwrap();

        let a = bad_probability_mc(q, &lat1, &mu, 4, 4, 10.0, 100, 11).unwrap();
        let b = bad_probability_mc(q, &lat1, &mu, 4, 4, 10.0, 100, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 100);
        assert!(a.ci_lo <= a.fraction && a.fraction <= a.ci_hi);
        assert!(a.ci_lo >= 0.0 && a.ci_hi <= 1.0);
        assert!(a.csv().starts_with("trial,seed,w_x,w_y,observable\n"));

        // small scale gaps leave qualifying levels for condition (a), and any
        // such level certifies badness regardless of the translation
        let certain = bad_probability_mc(q, &lat1, &mu, 4, 1, 10.0, 100, 11).unwrap();
        assert_eq!(certain.fraction, 1.0);

        // the sweep over the gap is monotone within confidence intervals
        let mut prev_hi = f64::INFINITY;
        for m in 1..=4 {
            let est = bad_probability_mc(q, &lat1, &mu, 4, m, 10.0, 100, 11).unwrap();
            assert!(
                est.ci_lo <= prev_hi,
                "fraction jumped upward outside the interval at m = {m}"
            );
            prev_hi = est.ci_hi;
        }
    }

    #[test]
    fn monte_carlo_rejects_thin_trials_and_oversized_data() {
        let lat1 = DyadicLattice::new(4, Point::new(0.0, 0.0)).unwrap();
        let q = lat1.locate(Point::new(2.0, 2.0), 2).unwrap();
        let mu = AtomicMeasure::new(vec![(Point::new(1.0, 0.0), 1.0)], 1e-6).unwrap();
        assert!(bad_probability_mc(q, &lat1, &mu, 4, 2, 10.0, 50, 0).is_err());
        // n = 2 bounds the data by 2^{-1} = 0.5 < 1
        assert!(bad_probability_mc(q, &lat1, &mu, 2, 2, 10.0, 100, 0).is_err());
    }
}
