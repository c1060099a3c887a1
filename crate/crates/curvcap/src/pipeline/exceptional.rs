use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{cauchy_exceedance_radius, cauchy_maximal};
use crate::plane::{
    vitali_5r, AtomicMeasure, Ball, ComplexAtomicMeasure, DyadicLattice, DyadicSquare, Point,
    RegionMember, RegionUnion,
};
use crate::sum::pairwise_sum;

/// Largest radius at which the linear-growth bound fails at `x`: the sup of
/// `r` with closed-ball mass `> c0 * r`, or 0 if there is none.
///
/// The ball mass is a right-continuous step function of `r` with jumps at the
/// atom distances, so on each interval between consecutive distances the
/// qualifying radii form `[d, min(mass/c0, d_next))` and the sup is attained
/// at one of these breakpoint expressions.
pub fn ahlfors_radius(m: &AtomicMeasure, x: Point, c0: f64) -> Result<f64> {
    check_c0(c0)?;
    Ok(ahlfors_radius_unchecked(m, x, c0))
}

fn check_c0(c0: f64) -> Result<()> {
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::invalid("growth constant must be positive"));
    }
    Ok(())
}

fn ahlfors_radius_unchecked(m: &AtomicMeasure, x: Point, c0: f64) -> f64 {
    let mut by_dist: Vec<(f64, f64)> = m.atoms().iter().map(|&(p, w)| (p.dist(x), w)).collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = 0.0f64;
    let mut cum = 0.0f64;
    let mut i = 0;
    while i < by_dist.len() {
        let d = by_dist[i].0;
        while i < by_dist.len() && by_dist[i].0 == d {
            cum += by_dist[i].1;
            i += 1;
        }
        let d_next = if i < by_dist.len() {
            by_dist[i].0
        } else {
            f64::INFINITY
        };
        let cap = cum / c0;
        if cap > d {
            best = best.max(cap.min(d_next));
        }
    }
    best
}

/// A point of the measure where linear growth fails, with its critical radius.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NonAhlforsBall {
    pub atom_index: usize,
    pub center: Point,
    pub radius: f64,
}

/// Vitali-selected non-Ahlfors balls and their 5-dilates (whose union is the
/// first exceptional set).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HSet {
    pub selected: Vec<NonAhlforsBall>,
    /// 5-dilates of `selected`, same order.
    pub dilated: Vec<Ball>,
    pub sum_radii: f64,
}

impl HSet {
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.dilated.iter().any(|b| b.contains(p))
    }
}

/// Scans every atom of `m` for a positive critical radius, Vitali-selects a
/// disjoint subfamily, and 5-dilates it. Disjointness of the selected closed
/// balls makes `sum_radii <= mass / c0` a theorem (each selected ball carries
/// mass at least `c0` times its radius); the inequality is still re-checked
/// and reported as a stage failure if floating point ever broke it.
pub fn build_h(m: &AtomicMeasure, c0: f64) -> Result<HSet> {
    check_c0(c0)?;
    let radii: Vec<f64> = (0..m.len())
        .into_par_iter()
        .map(|i| ahlfors_radius_unchecked(m, m.atoms()[i].0, c0))
        .collect();
    let candidates: Vec<NonAhlforsBall> = radii
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r > 0.0)
        .map(|(i, &r)| NonAhlforsBall {
            atom_index: i,
            center: m.atoms()[i].0,
            radius: r,
        })
        .collect();
    let balls: Vec<Ball> = candidates
        .iter()
        .map(|c| Ball::new(c.center, c.radius))
        .collect::<Result<_>>()?;
    let keep = vitali_5r(&balls);
    let selected: Vec<NonAhlforsBall> = keep.iter().map(|&i| candidates[i]).collect();
    let dilated: Vec<Ball> = keep
        .iter()
        .map(|&i| balls[i].dilate(5.0))
        .collect::<Result<_>>()?;
    let rs: Vec<f64> = selected.iter().map(|c| c.radius).collect();
    let sum_radii = pairwise_sum(&rs);
    if sum_radii > m.mass() / c0 * (1.0 + 1e-9) {
        return Err(Error::StageFailure {
            stage: "non-ahlfors-balls",
            reason: format!(
                "selected radii sum {} exceeds mass/c0 = {}",
                sum_radii,
                m.mass() / c0
            ),
        });
    }
    Ok(HSet {
        selected,
        dilated,
        sum_radii,
    })
}

/// Maximal dyadic squares absorbing the non-Ahlfors balls: for each selected
/// ball the (unique) dyadic side in `(10R, 20R]`, the at-most-four squares of
/// that side meeting the 5-dilated ball, then the maximal-square reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HdSet {
    pub lattice: DyadicLattice,
    pub squares: Vec<DyadicSquare>,
    pub sum_sides: f64,
}

impl HdSet {
    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    /// Half-open membership in the union.
    pub fn contains(&self, p: Point) -> bool {
        self.squares
            .iter()
            .any(|&q| self.lattice.square_contains(q, p))
    }
}

pub fn build_hd(h: &HSet, lattice: &DyadicLattice) -> Result<HdSet> {
    let mut raw: Vec<DyadicSquare> = Vec::new();
    for ball in &h.selected {
        let r = ball.radius;
        // the octave (10R, 20R] holds exactly one power of two
        let mut level = (10.0 * r).log2().floor() as i32 + 1;
        while (level as f64).exp2() <= 10.0 * r {
            level += 1;
        }
        while ((level - 1) as f64).exp2() > 10.0 * r {
            level -= 1;
        }
        if (level as f64).exp2() > 20.0 * r {
            return Err(Error::StageFailure {
                stage: "ball-absorbing-squares",
                reason: format!("no dyadic side in the octave above 10R for R = {r}"),
            });
        }
        if level < lattice.min_level() || level > lattice.root_level() {
            return Err(Error::LatticeTooSmall(format!(
                "absorbing level {level} outside lattice range"
            )));
        }
        let rr = 5.0 * r;
        let c = ball.center;
        let cell_of = |p: Point| lattice.locate(p, level);
        // the 5R-ball's bounding box spans at most 2 cells per axis because
        // 10R < side; its corner cells enumerate every cell meeting the box
        let corners = [
            cell_of(Point::new(c.x - rr, c.y - rr))?,
            cell_of(Point::new(c.x + rr, c.y - rr))?,
            cell_of(Point::new(c.x - rr, c.y + rr))?,
            cell_of(Point::new(c.x + rr, c.y + rr))?,
        ];
        for q in corners {
            if lattice.to_square(q).dist(c) <= rr && !raw.contains(&q) {
                raw.push(q);
            }
        }
    }
    // maximal reduction: drop strict descendants of another kept square
    let squares: Vec<DyadicSquare> = raw
        .iter()
        .filter(|&&q| {
            !raw.iter()
                .any(|&p| p != q && q.is_descendant_of(p))
        })
        .copied()
        .collect();
    let mut squares = squares;
    squares.sort_by(|a, b| {
        b.level
            .cmp(&a.level)
            .then(a.kx.cmp(&b.kx))
            .then(a.ky.cmp(&b.ky))
    });
    let sides: Vec<f64> = squares.iter().map(|q| q.side()).collect();
    let sum_sides = pairwise_sum(&sides);
    if sum_sides > 80.0 * h.sum_radii * (1.0 + 1e-9) {
        return Err(Error::StageFailure {
            stage: "ball-absorbing-squares",
            reason: format!(
                "side sum {} exceeds 80 x radius sum {}",
                sum_sides, h.sum_radii
            ),
        });
    }
    Ok(HdSet {
        lattice: *lattice,
        squares,
        sum_sides,
    })
}

/// A point where the maximal transform exceeds the threshold, with the
/// largest truncation radius still exceeding it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SPoint {
    pub atom_index: usize,
    pub center: Point,
    pub c_star: f64,
    pub radius: f64,
}

/// High-transform exceptional set: the union of balls `B(x, eps(x))` over
/// atoms where the maximal transform exceeds the threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SSet {
    pub alpha: f64,
    pub points: Vec<SPoint>,
    pub balls: Vec<Ball>,
}

impl SSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.balls.iter().any(|b| b.contains(p))
    }
}

pub fn build_s(nu: &ComplexAtomicMeasure, mu: &AtomicMeasure, alpha_s: f64) -> Result<SSet> {
    if !(alpha_s > 0.0 && alpha_s.is_finite()) {
        return Err(Error::invalid("transform threshold must be positive"));
    }
    let hits: Vec<Option<SPoint>> = (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let x = mu.atoms()[i].0;
            let c_star = cauchy_maximal(nu, x);
            if c_star > alpha_s {
                let radius = cauchy_exceedance_radius(nu, x, alpha_s)
                    .expect("maximal transform exceeds the threshold at a breakpoint");
                Some(SPoint {
                    atom_index: i,
                    center: x,
                    c_star,
                    radius,
                })
            } else {
                None
            }
        })
        .collect();
    let points: Vec<SPoint> = hits.into_iter().flatten().collect();
    let balls: Vec<Ball> = points
        .iter()
        .map(|p| Ball::new(p.center, p.radius))
        .collect::<Result<_>>()?;
    Ok(SSet {
        alpha: alpha_s,
        points,
        balls,
    })
}

/// A maximal dyadic square on which the positive measure dominates the
/// complex one, with both masses recorded.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TdSquare {
    pub square: DyadicSquare,
    pub mu_mass: f64,
    pub nu_mass: Complex64,
}

/// Degenerate-density exceptional set: maximal dyadic squares with
/// `mu(R) >= c_d |nu(R)|` (and positive mass).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TdSet {
    pub lattice: DyadicLattice,
    pub c_d: f64,
    pub squares: Vec<TdSquare>,
}

impl TdSet {
    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    /// Half-open membership in the union.
    pub fn contains(&self, p: Point) -> bool {
        self.squares
            .iter()
            .any(|t| self.lattice.square_contains(t.square, p))
    }
}

pub fn build_td(
    mu: &AtomicMeasure,
    nu: &ComplexAtomicMeasure,
    lattice: &DyadicLattice,
    c_d: f64,
) -> Result<TdSet> {
    if !(c_d > 1.0 && c_d.is_finite()) {
        return Err(Error::invalid("dominance factor must exceed 1"));
    }
    for &(p, _) in mu.atoms() {
        if !lattice.in_root(p) {
            return Err(Error::LatticeTooSmall(format!(
                "measure atom ({}, {}) outside lattice root",
                p.x, p.y
            )));
        }
    }
    for &(p, _) in nu.atoms() {
        if !lattice.in_root(p) {
            return Err(Error::LatticeTooSmall(format!(
                "complex-measure atom ({}, {}) outside lattice root",
                p.x, p.y
            )));
        }
    }
    let mut out: Vec<TdSquare> = Vec::new();
    let mu_all: Vec<usize> = (0..mu.len()).collect();
    let nu_all: Vec<usize> = (0..nu.len()).collect();
    descend_td(mu, nu, lattice, c_d, lattice.root(), mu_all, nu_all, &mut out);
    Ok(TdSet {
        lattice: *lattice,
        c_d,
        squares: out,
    })
}

#[allow(clippy::too_many_arguments)]
fn descend_td(
    mu: &AtomicMeasure,
    nu: &ComplexAtomicMeasure,
    lattice: &DyadicLattice,
    c_d: f64,
    q: DyadicSquare,
    mu_idx: Vec<usize>,
    nu_idx: Vec<usize>,
    out: &mut Vec<TdSquare>,
) {
    // squares with no positive mass can never qualify, nor can descendants
    if mu_idx.is_empty() {
        return;
    }
    let mu_mass: f64 = mu_idx.iter().map(|&i| mu.atoms()[i].1).sum();
    let nu_mass: Complex64 = nu_idx.iter().map(|&i| nu.atoms()[i].1).sum();
    if mu_mass > 0.0 && mu_mass >= c_d * nu_mass.norm() {
        out.push(TdSquare {
            square: q,
            mu_mass,
            nu_mass,
        });
        return;
    }
    if q.level <= lattice.min_level() {
        return;
    }
    for child in q.children() {
        let cm: Vec<usize> = mu_idx
            .iter()
            .copied()
            .filter(|&i| lattice.square_contains(child, mu.atoms()[i].0))
            .collect();
        let cn: Vec<usize> = nu_idx
            .iter()
            .copied()
            .filter(|&i| lattice.square_contains(child, nu.atoms()[i].0))
            .collect();
        if !cm.is_empty() || !cn.is_empty() {
            descend_td(mu, nu, lattice, c_d, child, cm, cn, out);
        }
    }
}

/// The four exceptional sets of one pipeline run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExceptionalSets {
    pub h: HSet,
    pub hd: HdSet,
    pub s: SSet,
    pub td: TdSet,
}

impl ExceptionalSets {
    /// Membership in the union used for terminal-square classification
    /// (absorbing squares and dominance squares, not the transform balls).
    pub fn in_hd_or_td(&self, p: Point) -> bool {
        self.hd.contains(p) || self.td.contains(p)
    }

    /// Membership in the full suppression union (adds the transform balls).
    pub fn in_wd(&self, p: Point) -> bool {
        self.in_hd_or_td(p) || self.s.contains(p)
    }

    /// The suppression union as a geometric region (closed members; the
    /// half-open/closed boundary difference is invisible to distances).
    pub fn wd_region(&self) -> Result<RegionUnion> {
        let mut members: Vec<RegionMember> = Vec::new();
        for &q in &self.hd.squares {
            members.push(RegionMember::Square(self.hd.lattice.to_square(q)));
        }
        for &b in &self.s.balls {
            members.push(RegionMember::Ball(b));
        }
        for t in &self.td.squares {
            members.push(RegionMember::Square(self.td.lattice.to_square(t.square)));
        }
        RegionUnion::new(members)
    }

    /// Mass of `m` carried by atoms inside the suppression union.
    pub fn wd_mass(&self, m: &AtomicMeasure) -> f64 {
        let ws: Vec<f64> = m
            .atoms()
            .iter()
            .filter(|&&(p, _)| self.in_wd(p))
            .map(|&(_, w)| w)
            .collect();
        pairwise_sum(&ws)
    }
}
