use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::measure::AtomicMeasure;
use crate::plane::point::Point;
use crate::sum::Cascade;

/// Closed ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !center.is_finite() || !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::invalid("ball needs finite center and nonnegative radius"));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(self, p: Point) -> bool {
        self.center.dist(p) <= self.radius
    }

    pub fn intersects(self, other: Ball) -> bool {
        self.center.dist(other.center) <= self.radius + other.radius
    }

    pub fn dilate(self, factor: f64) -> Result<Ball> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("dilation factor must be positive"));
        }
        Ok(Ball { center: self.center, radius: self.radius * factor })
    }

    /// True if `other` is contained in `self`, with an ulp-scale slack so that
    /// exact geometric containment survives rounding.
    pub fn covers(self, other: Ball) -> bool {
        self.center.dist(other.center) + other.radius <= self.radius * (1.0 + 1e-12)
    }
}

/// Mass of the closed ball `b` under `m`.
pub fn ball_mass(m: &AtomicMeasure, b: Ball) -> f64 {
    let r2 = b.radius * b.radius;
    let mut acc = Cascade::new();
    for &(p, w) in m.atoms() {
        if p.dist2(b.center) <= r2 {
            acc.push(w);
        }
    }
    acc.finish()
}

/// Greedy Vitali selection: scan balls by decreasing radius (ties broken by
/// lexicographic center, then input index) and keep each ball disjoint from
/// everything kept so far. Returns indices into `balls` in selection order.
///
/// Every input ball intersects a kept ball of at least its radius, so it is
/// contained in the kept ball's 5-dilate.
pub fn vitali_5r(balls: &[Ball]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| {
        balls[b]
            .radius
            .total_cmp(&balls[a].radius)
            .then_with(|| balls[a].center.lex_cmp(balls[b].center))
            .then_with(|| a.cmp(&b))
    });
    let mut selected: Vec<usize> = Vec::new();
    for i in order {
        if selected.iter().all(|&s| !balls[s].intersects(balls[i])) {
            selected.push(i);
        }
    }
    selected
}
