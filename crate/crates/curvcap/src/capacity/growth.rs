use rayon::prelude::*;

use crate::error::Result;
use crate::plane::cover::{ball_mass, Ball};
use crate::plane::measure::AtomicMeasure;

/// Finite family of linear-growth constraints `m(B(x, r)) <= r`: one ball per
/// atom per dyadic radius `resolution * 2^k`, from k = 0 up through the first
/// radius exceeding the support diameter (so the largest ball sees the whole
/// set). Checking only dyadic radii is within a factor 2 of checking all
/// radii, since ball mass is monotone in r.
#[derive(Clone, Debug)]
pub struct GrowthConstraintSet {
    balls: Vec<Ball>,
}

impl GrowthConstraintSet {
    pub fn for_measure(m: &AtomicMeasure) -> Self {
        let d = m.diameter();
        let mut balls = Vec::new();
        for &(p, _) in m.atoms() {
            let mut r = m.resolution();
            loop {
                balls.push(Ball { center: p, radius: r });
                if r > d {
                    break;
                }
                r *= 2.0;
            }
        }
        GrowthConstraintSet { balls }
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    /// Worst violation factor `max_B m(B)/radius(B)`; 0 for an empty family
    /// or an all-zero measure. Values ≤ 1 mean every constraint holds.
    pub fn max_ratio(&self, m: &AtomicMeasure) -> f64 {
        // max of exact quotients: order-independent, safe to parallelize
        self.balls
            .par_iter()
            .map(|&b| ball_mass(m, b) / b.radius)
            .reduce(|| 0.0, f64::max)
    }

    pub fn is_admissible(&self, m: &AtomicMeasure, tol: f64) -> bool {
        self.max_ratio(m) <= 1.0 + tol
    }

    /// Largest factor in (0, 1] by which `m` must be rescaled to satisfy all
    /// constraints; 1 when already admissible.
    pub fn projection_scale(&self, m: &AtomicMeasure) -> f64 {
        let r = self.max_ratio(m);
        if r > 1.0 {
            1.0 / r
        } else {
            1.0
        }
    }
}

/// Global rescale of `m` onto the constraint set: multiplies every weight by
/// `projection_scale`, which preserves the weight profile, never increases
/// any weight, and makes every constraint hold.
pub fn project_growth(m: &AtomicMeasure, g: &GrowthConstraintSet) -> Result<AtomicMeasure> {
    m.scaled(g.projection_scale(m))
}
