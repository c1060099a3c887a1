use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::point::Point;
use crate::plane::square::Square;

/// Half-open square `origin + [kx, kx+1) x [ky, ky+1) * 2^level` of a
/// translated dyadic lattice. Side is `2^level`; children live at
/// `level - 1`. Indices are nonnegative within the lattice root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub level: i32,
    pub kx: i64,
    pub ky: i64,
}

impl DyadicSquare {
    pub fn side(self) -> f64 {
        (self.level as f64).exp2()
    }

    /// The four children at `level - 1`, in (lo-lo, hi-lo, lo-hi, hi-hi) order.
    pub fn children(self) -> [DyadicSquare; 4] {
        let l = self.level - 1;
        let (kx, ky) = (self.kx * 2, self.ky * 2);
        [
            DyadicSquare { level: l, kx, ky },
            DyadicSquare { level: l, kx: kx + 1, ky },
            DyadicSquare { level: l, kx, ky: ky + 1 },
            DyadicSquare { level: l, kx: kx + 1, ky: ky + 1 },
        ]
    }

    pub fn parent(self) -> DyadicSquare {
        DyadicSquare {
            level: self.level + 1,
            kx: self.kx.div_euclid(2),
            ky: self.ky.div_euclid(2),
        }
    }

    /// True if `self` is contained in `other` (equality included).
    pub fn is_descendant_of(self, other: DyadicSquare) -> bool {
        if self.level > other.level {
            return false;
        }
        let shift = (other.level - self.level) as u32;
        if shift >= 63 {
            return other.kx == 0 && other.ky == 0;
        }
        self.kx >> shift == other.kx && self.ky >> shift == other.ky
    }
}

/// Dyadic lattice translated by `w`, rooted at `Q0 = w + [-2^N, 2^N)^2` with
/// `N = root_exp`. The root has level `root_exp + 1`. Levels are capped at
/// `max_depth` generations below the root.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DyadicLattice {
    pub root_exp: i32,
    pub translation: Point,
    pub max_depth: i32,
}

pub const DEFAULT_MAX_DEPTH: i32 = 30;

impl DyadicLattice {
    pub fn new(root_exp: i32, translation: Point) -> Result<Self> {
        if !translation.is_finite() || root_exp < -500 || root_exp > 500 {
            return Err(Error::invalid("bad lattice parameters"));
        }
        Ok(DyadicLattice { root_exp, translation, max_depth: DEFAULT_MAX_DEPTH })
    }

    pub fn root_level(&self) -> i32 {
        self.root_exp + 1
    }

    pub fn min_level(&self) -> i32 {
        self.root_level() - self.max_depth
    }

    pub fn root(&self) -> DyadicSquare {
        DyadicSquare { level: self.root_level(), kx: 0, ky: 0 }
    }

    /// Lower-left corner of the root; all square corners are offsets from it.
    pub fn origin(&self) -> Point {
        let r = (self.root_exp as f64).exp2();
        Point::new(self.translation.x - r, self.translation.y - r)
    }

    pub fn corner(&self, q: DyadicSquare) -> Point {
        let s = q.side();
        let o = self.origin();
        // k * 2^level is exact in f64 for the index ranges we allow
        Point::new(o.x + q.kx as f64 * s, o.y + q.ky as f64 * s)
    }

    pub fn center(&self, q: DyadicSquare) -> Point {
        let c = self.corner(q);
        let h = q.side() * 0.5;
        Point::new(c.x + h, c.y + h)
    }

    /// Closed geometric square with the same corners (the half-open boundary
    /// difference is invisible to distance computations).
    pub fn to_square(&self, q: DyadicSquare) -> Square {
        Square { center: self.center(q), side: q.side() }
    }

    /// Half-open membership test.
    pub fn square_contains(&self, q: DyadicSquare, p: Point) -> bool {
        let c = self.corner(q);
        let s = q.side();
        p.x >= c.x && p.x < c.x + s && p.y >= c.y && p.y < c.y + s
    }

    /// The level-`level` square containing `p`; errors if `p` is outside the
    /// root or `level` is below the depth cap.
    pub fn locate(&self, p: Point, level: i32) -> Result<DyadicSquare> {
        if level < self.min_level() || level > self.root_level() {
            return Err(Error::invalid("level outside lattice range"));
        }
        let o = self.origin();
        let s = (level as f64).exp2();
        let kx = ((p.x - o.x) / s).floor();
        let ky = ((p.y - o.y) / s).floor();
        let n = ((self.root_level() - level) as f64).exp2();
        if kx < 0.0 || ky < 0.0 || kx >= n || ky >= n {
            return Err(Error::LatticeTooSmall(format!(
                "point ({}, {}) outside root square",
                p.x, p.y
            )));
        }
        Ok(DyadicSquare { level, kx: kx as i64, ky: ky as i64 })
    }

    pub fn in_root(&self, p: Point) -> bool {
        self.square_contains(self.root(), p)
    }
}
