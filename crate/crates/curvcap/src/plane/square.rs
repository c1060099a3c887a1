use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::point::Point;

/// Closed axis-parallel square given by center and side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub center: Point,
    pub side: f64,
}

impl Square {
    pub fn new(center: Point, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) || !center.is_finite() {
            return Err(Error::invalid("square needs finite center and positive side"));
        }
        Ok(Square { center, side })
    }

    /// Concentric dilate `factor * Q`.
    pub fn dilate(self, factor: f64) -> Result<Square> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("dilation factor must be positive"));
        }
        Ok(Square { center: self.center, side: self.side * factor })
    }

    pub fn half_side(self) -> f64 {
        self.side * 0.5
    }

    pub fn contains(self, p: Point) -> bool {
        let h = self.half_side();
        (p.x - self.center.x).abs() <= h && (p.y - self.center.y).abs() <= h
    }

    /// Euclidean distance from `p` to the closed square (0 inside).
    pub fn dist(self, p: Point) -> f64 {
        let h = self.half_side();
        let dx = ((p.x - self.center.x).abs() - h).max(0.0);
        let dy = ((p.y - self.center.y).abs() - h).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    /// Euclidean distance from `p` to the boundary of the square.
    pub fn boundary_dist(self, p: Point) -> f64 {
        let h = self.half_side();
        let ax = (p.x - self.center.x).abs() - h;
        let ay = (p.y - self.center.y).abs() - h;
        if ax <= 0.0 && ay <= 0.0 {
            // inside: distance to the nearest edge
            (-ax).min(-ay)
        } else {
            let dx = ax.max(0.0);
            let dy = ay.max(0.0);
            (dx * dx + dy * dy).sqrt()
        }
    }

    pub fn corner_lo(self) -> Point {
        Point::new(self.center.x - self.half_side(), self.center.y - self.half_side())
    }

    pub fn corner_hi(self) -> Point {
        Point::new(self.center.x + self.half_side(), self.center.y + self.half_side())
    }
}
