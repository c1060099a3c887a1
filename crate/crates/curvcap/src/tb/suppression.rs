use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{Point, RegionUnion};

/// A 1-Lipschitz damping profile for kernel suppression: over a region `W`
/// it evaluates
///
/// `theta(x) = max(floor, dist(x, complement of W))`,
///
/// so the profile equals `floor` everywhere outside `W` and grows with depth
/// inside. Storing the region itself (rather than an arbitrary closure) makes
/// the Lipschitz bound structural: distance functions are 1-Lipschitz and the
/// max with a constant preserves that.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuppressionProfile {
    region: RegionUnion,
    floor: f64,
}

impl SuppressionProfile {
    pub fn new(region: RegionUnion, floor: f64) -> Result<Self> {
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(Error::invalid("suppression floor must be nonnegative"));
        }
        Ok(SuppressionProfile { region, floor })
    }

    /// The identically-zero profile: no suppression anywhere.
    pub fn zero() -> Self {
        SuppressionProfile { region: RegionUnion::new(Vec::new()).expect("empty union"), floor: 0.0 }
    }

    /// A constant profile with no region.
    pub fn constant(floor: f64) -> Result<Self> {
        Self::new(RegionUnion::new(Vec::new()).expect("empty union"), floor)
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn region(&self) -> &RegionUnion {
        &self.region
    }

    pub fn theta(&self, x: Point) -> f64 {
        self.floor.max(self.region.dist_to_complement(x))
    }

    /// True when the profile vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.floor == 0.0 && self.region.is_empty()
    }
}
