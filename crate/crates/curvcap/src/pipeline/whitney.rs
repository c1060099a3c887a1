use serde::{Deserialize, Serialize};

use crate::pipeline::raster::RasterOpenSet;
use crate::plane::{AtomicMeasure, Point, Square};

/// Expansion factor whose dilate must stay inside the open set.
const INSIDE_FACTOR: f64 = 20.0;
/// Expansion factor guaranteed to meet the complement (parent of an emitted
/// square violates 20P, and 20P fits inside 60Q).
pub const R_CHECK: f64 = 60.0;

/// One Whitney square: a `cells x cells` block of raster cells, aligned to the
/// raster grid with `cells` a power of two.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WhitneySquare {
    pub square: Square,
    pub i0: usize,
    pub j0: usize,
    pub cells: usize,
}

/// Maximal grid-aligned dyadic squares `Q` with `20Q` inside the raster set.
///
/// Invariants held by construction: interiors pairwise disjoint (disjoint cell
/// blocks); every emitted square passes `20Q ⊂ Ω` exactly on the raster;
/// maximality gives `60Q ∩ Ω^c ≠ ∅`. Marked cells within 20·cell-size of the
/// complement may stay uncovered: below one cell no dyadic square exists, so
/// the boundary ring of a raster set is not tiled (the decomposition of the
/// underlying open set would keep subdividing there).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WhitneyDecomposition {
    pub squares: Vec<WhitneySquare>,
    pub r_check: f64,
    /// Measured sup over raster cell centers of the number of covering 10Q.
    pub max_overlap_10q: u32,
    pub rho: f64,
}

impl WhitneyDecomposition {
    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn geometric_squares(&self) -> Vec<Square> {
        self.squares.iter().map(|w| w.square).collect()
    }
}

fn block_square(omega: &RasterOpenSet, i0: i64, j0: i64, size: i64) -> Square {
    let rho = omega.rho();
    let o = omega.origin();
    let half = size as f64 * rho / 2.0;
    Square {
        center: Point::new(
            o.x + i0 as f64 * rho + half,
            o.y + j0 as f64 * rho + half,
        ),
        side: size as f64 * rho,
    }
}

fn descend(
    omega: &RasterOpenSet,
    i0: i64,
    j0: i64,
    size: i64,
    out: &mut Vec<WhitneySquare>,
) {
    if omega.marked_in_rect(i0, j0, i0 + size - 1, j0 + size - 1) == 0 {
        return;
    }
    let sq = block_square(omega, i0, j0, size);
    let inside = sq.dilate(INSIDE_FACTOR).expect("dilate by 20");
    if omega.square_inside(inside) {
        out.push(WhitneySquare {
            square: sq,
            i0: i0 as usize,
            j0: j0 as usize,
            cells: size as usize,
        });
        return;
    }
    if size == 1 {
        return;
    }
    let h = size / 2;
    descend(omega, i0, j0, h, out);
    descend(omega, i0 + h, j0, h, out);
    descend(omega, i0, j0 + h, h, out);
    descend(omega, i0 + h, j0 + h, h, out);
}

/// Whitney decomposition of a rasterized open set.
pub fn whitney(omega: &RasterOpenSet) -> WhitneyDecomposition {
    let (nx, ny) = omega.dims();
    let mut squares = Vec::new();
    if !omega.is_empty() {
        let top = nx.max(ny).next_power_of_two() as i64;
        descend(omega, 0, 0, top, &mut squares);
    }
    let max_overlap_10q = overlap_10q(omega, &squares);
    WhitneyDecomposition { squares, r_check: R_CHECK, max_overlap_10q, rho: omega.rho() }
}

/// Sup over raster cell centers of `Σ χ_{10Q}`, via a 2D difference array.
fn overlap_10q(omega: &RasterOpenSet, squares: &[WhitneySquare]) -> u32 {
    let (nx, ny) = omega.dims();
    if nx == 0 || ny == 0 || squares.is_empty() {
        return 0;
    }
    let rho = omega.rho();
    let o = omega.origin();
    let mut diff = vec![0i32; (nx + 1) * (ny + 1)];
    for w in squares {
        let c = w.square.center;
        let half = 5.0 * w.square.side; // half-side of 10Q
        // cell centers (i + 0.5) rho within [c - half, c + half]
        let i0 = (((c.x - half - o.x) / rho - 0.5).ceil().max(0.0)) as usize;
        let j0 = (((c.y - half - o.y) / rho - 0.5).ceil().max(0.0)) as usize;
        let i1 = ((c.x + half - o.x) / rho - 0.5).floor();
        let j1 = ((c.y + half - o.y) / rho - 0.5).floor();
        if i1 < i0 as f64 || j1 < j0 as f64 {
            continue;
        }
        let i1 = (i1 as usize).min(nx - 1);
        let j1 = (j1 as usize).min(ny - 1);
        if i0 > i1 || j0 > j1 {
            continue;
        }
        diff[j0 * (nx + 1) + i0] += 1;
        diff[j0 * (nx + 1) + i1 + 1] -= 1;
        diff[(j1 + 1) * (nx + 1) + i0] -= 1;
        diff[(j1 + 1) * (nx + 1) + i1 + 1] += 1;
    }
    let mut best = 0i32;
    let mut rowacc = vec![0i32; nx + 1];
    for j in 0..ny {
        for i in 0..nx {
            rowacc[i] += diff[j * (nx + 1) + i];
        }
        let mut run = 0i32;
        for i in 0..nx {
            run += rowacc[i];
            best = best.max(run);
        }
    }
    best.max(0) as u32
}

/// Indices of Whitney squares whose 2-dilate meets the support of `e`.
pub fn select_f(w: &WhitneyDecomposition, e: &AtomicMeasure) -> Vec<usize> {
    w.squares
        .iter()
        .enumerate()
        .filter_map(|(idx, ws)| {
            let two_q = ws.square.dilate(2.0).expect("dilate by 2");
            e.atoms()
                .iter()
                .any(|&(p, _)| two_q.contains(p))
                .then_some(idx)
        })
        .collect()
}
