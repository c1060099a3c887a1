use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{curvature_potential_unchecked, maximal_radial};
use crate::plane::{AtomicMeasure, Point, Square};

/// Rasterized bounded open set: the union of the marked half-open grid cells
/// `origin + [i, i+1) x [j, j+1) * rho`. Membership and distance-to-complement
/// are exact for this union (everything outside the grid is complement).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RasterOpenSet {
    origin: Point,
    rho: f64,
    nx: usize,
    ny: usize,
    mask: Vec<bool>,
    /// Integral image: prefix[(j)*(nx+1)+i] = marked cells in [0,i) x [0,j).
    prefix: Vec<u32>,
}

/// Hard cap on raster size; a level-set request beyond this is a config error.
const MAX_CELLS: usize = 64_000_000;

impl RasterOpenSet {
    pub fn from_mask(
        origin: Point,
        rho: f64,
        nx: usize,
        ny: usize,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) || !origin.is_finite() {
            return Err(Error::invalid("raster needs a positive cell size and finite origin"));
        }
        if mask.len() != nx * ny {
            return Err(Error::invalid("raster mask length must be nx*ny"));
        }
        if nx * ny > MAX_CELLS {
            return Err(Error::invalid("raster too large"));
        }
        let mut prefix = vec![0u32; (nx + 1) * (ny + 1)];
        for j in 0..ny {
            let mut row = 0u32;
            for i in 0..nx {
                row += mask[j * nx + i] as u32;
                prefix[(j + 1) * (nx + 1) + i + 1] = prefix[j * (nx + 1) + i + 1] + row;
            }
        }
        Ok(RasterOpenSet { origin, rho, nx, ny, mask, prefix })
    }

    pub fn empty() -> Self {
        RasterOpenSet {
            origin: Point::new(0.0, 0.0),
            rho: 1.0,
            nx: 0,
            ny: 0,
            mask: Vec::new(),
            prefix: vec![0],
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Grid dimensions in cells (nx, ny).
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Number of marked cells.
    pub fn cell_count(&self) -> usize {
        *self.prefix.last().unwrap() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.cell_count() == 0
    }

    /// Closed bounding box of the whole grid.
    pub fn grid_bbox(&self) -> (Point, Point) {
        (
            self.origin,
            Point::new(
                self.origin.x + self.nx as f64 * self.rho,
                self.origin.y + self.ny as f64 * self.rho,
            ),
        )
    }

    pub fn marked(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny && self.mask[j * self.nx + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.rho,
            self.origin.y + (j as f64 + 0.5) * self.rho,
        )
    }

    /// Cell index of a point, or None outside the grid.
    pub fn cell_index(&self, p: Point) -> Option<(usize, usize)> {
        let i = ((p.x - self.origin.x) / self.rho).floor();
        let j = ((p.y - self.origin.y) / self.rho).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Exact membership in the union of marked half-open cells.
    pub fn contains(&self, p: Point) -> bool {
        match self.cell_index(p) {
            Some((i, j)) => self.mask[j * self.nx + i],
            None => false,
        }
    }

    /// Marked-cell count in the inclusive index rectangle (no clipping; caller
    /// guarantees the range is inside the grid).
    fn marked_count(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> u32 {
        let w = self.nx + 1;
        self.prefix[(j1 + 1) * w + i1 + 1] + self.prefix[j0 * w + i0]
            - self.prefix[j0 * w + i1 + 1]
            - self.prefix[(j1 + 1) * w + i0]
    }

    /// Marked-cell count in the inclusive index rectangle, clipped to the
    /// grid; indices may be out of range.
    pub fn marked_in_rect(&self, i0: i64, j0: i64, i1: i64, j1: i64) -> u32 {
        let i0 = i0.max(0);
        let j0 = j0.max(0);
        let i1 = i1.min(self.nx as i64 - 1);
        let j1 = j1.min(self.ny as i64 - 1);
        if i0 > i1 || j0 > j1 {
            return 0;
        }
        self.marked_count(i0 as usize, j0 as usize, i1 as usize, j1 as usize)
    }

    /// True iff every cell meeting the closed rectangle [lo, hi] is marked.
    /// Any part of the rectangle outside the grid meets complement.
    pub fn rect_all_marked(&self, lo: Point, hi: Point) -> bool {
        let i0 = ((lo.x - self.origin.x) / self.rho).floor();
        let j0 = ((lo.y - self.origin.y) / self.rho).floor();
        let i1 = ((hi.x - self.origin.x) / self.rho).floor();
        let j1 = ((hi.y - self.origin.y) / self.rho).floor();
        if i0 < 0.0 || j0 < 0.0 || i1 >= self.nx as f64 || j1 >= self.ny as f64 {
            return false;
        }
        let (i0, j0, i1, j1) = (i0 as usize, j0 as usize, i1 as usize, j1 as usize);
        let want = ((i1 - i0 + 1) * (j1 - j0 + 1)) as u32;
        self.marked_count(i0, j0, i1, j1) == want
    }

    /// True iff the closed square lies inside the raster set.
    pub fn square_inside(&self, sq: Square) -> bool {
        self.rect_all_marked(sq.corner_lo(), sq.corner_hi())
    }

    /// Exact distance from `p` to the complement of the raster set (0 outside
    /// or on the boundary). Expanding-ring search over cells; the grid's own
    /// outer boundary seeds the bound, so termination is guaranteed.
    pub fn dist_to_complement(&self, p: Point) -> f64 {
        let (ci, cj) = match self.cell_index(p) {
            Some(idx) if self.mask[idx.1 * self.nx + idx.0] => idx,
            _ => return 0.0,
        };
        let (lo, hi) = self.grid_bbox();
        let mut best = (p.x - lo.x)
            .min(hi.x - p.x)
            .min(p.y - lo.y)
            .min(hi.y - p.y);
        let mut k = 1usize;
        loop {
            if (k as f64 - 1.0) * self.rho >= best {
                return best;
            }
            let ilo = ci as i64 - k as i64;
            let ihi = ci as i64 + k as i64;
            let jlo = cj as i64 - k as i64;
            let jhi = cj as i64 + k as i64;
            let mut any_in_grid = false;
            let mut visit = |i: i64, j: i64, this: &RasterOpenSet, best: &mut f64| {
                if i < 0 || j < 0 || i >= this.nx as i64 || j >= this.ny as i64 {
                    return;
                }
                any_in_grid = true;
                if !this.mask[j as usize * this.nx + i as usize] {
                    let rlo = Point::new(
                        this.origin.x + i as f64 * this.rho,
                        this.origin.y + j as f64 * this.rho,
                    );
                    let dx = (rlo.x - p.x).max(p.x - (rlo.x + this.rho)).max(0.0);
                    let dy = (rlo.y - p.y).max(p.y - (rlo.y + this.rho)).max(0.0);
                    *best = best.min((dx * dx + dy * dy).sqrt());
                }
            };
            for i in ilo..=ihi {
                visit(i, jlo, self, &mut best);
                visit(i, jhi, self, &mut best);
            }
            for j in (jlo + 1)..jhi {
                visit(ilo, j, self, &mut best);
                visit(ihi, j, self, &mut best);
            }
            if !any_in_grid {
                return best;
            }
            k += 1;
        }
    }

    /// Indices of all marked cells, row-major order.
    pub fn marked_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.cell_count());
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.mask[j * self.nx + i] {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Rasterized level set `{x: U_sigma(x) > lambda}` of the curvature potential
/// `U_sigma = M_sigma + sqrt(c^2_sigma)`, sampled at cell centers over the
/// support box padded by `mass/lambda` (the radial-density reach: beyond that
/// distance the maximal density alone cannot exceed `lambda`; the curvature
/// tail may overshoot the pad, so the raster deliberately clips there).
/// Truncation for the curvature part is the measure's own resolution.
pub fn level_set_omega(sigma: &AtomicMeasure, lambda: f64, rho: f64) -> Result<RasterOpenSet> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("level threshold must be positive and finite"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("raster cell size must be positive and finite"));
    }
    let (lo, hi) = match sigma.support_bbox() {
        Some(b) => b,
        None => return Ok(RasterOpenSet::empty()),
    };
    let pad = sigma.mass() / lambda;
    let origin = Point::new(lo.x - pad, lo.y - pad);
    let span_x = hi.x - lo.x + 2.0 * pad;
    let span_y = hi.y - lo.y + 2.0 * pad;
    let nx = (span_x / rho).ceil().max(1.0);
    let ny = (span_y / rho).ceil().max(1.0);
    if !(nx.is_finite() && ny.is_finite()) || nx * ny > MAX_CELLS as f64 {
        return Err(Error::invalid(
            "level-set raster too large; increase rho or lambda",
        ));
    }
    let (nx, ny) = (nx as usize, ny as usize);
    let eps = sigma.resolution();
    let mask: Vec<bool> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            let c = Point::new(
                origin.x + (i as f64 + 0.5) * rho,
                origin.y + (j as f64 + 0.5) * rho,
            );
            let m = maximal_radial(sigma, c);
            if m > lambda {
                return true;
            }
            let c2 = curvature_potential_unchecked(sigma, c, eps);
            m + c2.sqrt() > lambda
        })
        .collect();
    RasterOpenSet::from_mask(origin, rho, nx, ny, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_atom() -> AtomicMeasure {
        AtomicMeasure::new(vec![(Point::new(0.0, 0.0), 1.0)], 0.1).unwrap()
    }

    #[test]
    fn empty_measure_gives_empty_raster() {
        let m = AtomicMeasure::new(vec![], 1.0).unwrap();
        let o = level_set_omega(&m, 1.0, 0.5).unwrap();
        assert!(o.is_empty());
        assert!(!o.contains(Point::new(0.0, 0.0)));
    }

    #[test]
    fn single_atom_level_set_is_a_disk() {
        // U(x) = M(x) = 1/max(d, resolution)-ish; for lambda = 2 the set is the
        // disk of radius 1/2 = pad, so cells are marked iff center within 0.5.
        let o = level_set_omega(&unit_atom(), 2.0, 0.05).unwrap();
        assert!(o.contains(Point::new(0.0, 0.0)));
        assert!(o.contains(Point::new(0.4, 0.0)));
        assert!(!o.contains(Point::new(0.55, 0.3)));
        let (i, j) = o.cell_index(Point::new(0.45, 0.2)).unwrap();
        let c = o.cell_center(i, j);
        assert_eq!(o.contains(c), c.norm() < 0.5);
    }

    #[test]
    fn cell_count_decreases_as_lambda_grows() {
        let m = unit_atom();
        let c2 = level_set_omega(&m, 2.0, 0.05).unwrap().cell_count();
        let c4 = level_set_omega(&m, 4.0, 0.05).unwrap().cell_count();
        let c8 = level_set_omega(&m, 8.0, 0.05).unwrap().cell_count();
        assert!(c2 > c4 && c4 > c8, "{c2} {c4} {c8}");
        assert!(c8 > 0);
    }

    #[test]
    fn support_inside_omega_when_lambda_below_min_potential() {
        let m = crate::plane::cantor_set(2).unwrap();
        // min U over atoms is >= max ball ratio at the atom >= mass/diam > 0.7
        let o = level_set_omega(&m, 0.5, 0.02).unwrap();
        for &(p, _) in m.atoms() {
            assert!(o.contains(p), "atom {p:?} escaped the level set");
        }
    }

    #[test]
    fn membership_and_rect_queries_are_exact_on_the_mask() {
        // checkerboard 4x4 with rho 1: exercise boundary conventions
        let mut mask = vec![false; 16];
        for j in 0..4 {
            for i in 0..4 {
                mask[j * 4 + i] = (i + j) % 2 == 0;
            }
        }
        let r = RasterOpenSet::from_mask(Point::new(0.0, 0.0), 1.0, 4, 4, mask).unwrap();
        assert!(r.contains(Point::new(0.5, 0.5)));
        assert!(!r.contains(Point::new(1.5, 0.5)));
        // the point (1.0, 0.5) belongs to the half-open cell (1,0): unmarked
        assert!(!r.contains(Point::new(1.0, 0.5)));
        assert!(!r.rect_all_marked(Point::new(0.1, 0.1), Point::new(1.9, 0.9)));
        assert!(r.rect_all_marked(Point::new(0.1, 0.1), Point::new(0.9, 0.9)));
        // rectangle leaving the grid always fails
        assert!(!r.rect_all_marked(Point::new(-0.5, 0.1), Point::new(0.9, 0.9)));
    }

    #[test]
    fn dist_to_complement_exact_on_a_block() {
        // 8x8 fully marked block, rho = 0.5, origin 0: the set is (0,4)^2 as a
        // union of cells; interior distance = distance to the outer boundary.
        let r =
            RasterOpenSet::from_mask(Point::new(0.0, 0.0), 0.5, 8, 8, vec![true; 64]).unwrap();
        let p = Point::new(1.3, 2.0);
        assert!((r.dist_to_complement(p) - 1.3).abs() < 1e-12);
        assert_eq!(r.dist_to_complement(Point::new(-1.0, 2.0)), 0.0);
        // carve out one interior cell: cell (4,4) = [2, 2.5)^2
        let mut mask = vec![true; 64];
        mask[4 * 8 + 4] = false;
        let r = RasterOpenSet::from_mask(Point::new(0.0, 0.0), 0.5, 8, 8, mask).unwrap();
        // from (1.3, 2.0): hole's closest corner is (2.0, 2.0): distance 0.7
        assert!((r.dist_to_complement(p) - 0.7).abs() < 1e-12);
        // point inside the hole is complement
        assert_eq!(r.dist_to_complement(Point::new(2.2, 2.2)), 0.0);
    }

    #[test]
    fn level_set_rejects_bad_parameters() {
        assert!(level_set_omega(&unit_atom(), 0.0, 0.1).is_err());
        assert!(level_set_omega(&unit_atom(), 1.0, 0.0).is_err());
        assert!(level_set_omega(&unit_atom(), f64::NAN, 0.1).is_err());
    }
}
