//! Suppressed-kernel machinery on random dyadic lattices: 1-Lipschitz
//! suppression profiles, the damped Cauchy kernel and its truncated
//! transforms, terminal/transit classification against exceptional sets,
//! b-adapted martingale decomposition with its norm equivalence, a dyadic
//! Carleson imbedding check, good/bad square statistics, and the
//! probabilistic estimate of the well-covered atom set.

pub mod badsquares;
pub mod carleson;
pub mod classify;
pub mod gset;
pub mod kernel;
pub mod lattice;
pub mod martingale;
pub mod suppression;

pub use badsquares::{bad_probability_mc, is_bad, BadVerdict, McEstimate, McRow, MC_CSV_HEADER};
pub use carleson::{carleson_check, CarlesonOutcome};
pub use classify::{classify_squares, square_in_union, Classification, SquareLabel};
pub use gset::{g_set_estimate, operator_norm_probe, GSetEstimate, WdSample};
pub use kernel::{suppressed_cauchy, suppressed_cauchy_maximal, suppressed_kernel};
pub use lattice::{random_lattice, random_offset, RandomLattice};
pub use martingale::{
    norm_equivalence, DeltaComponent, MartingaleDecomposition, MartingaleMachine,
};
pub use suppression::SuppressionProfile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knobs of the probabilistic suite.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TbConfig {
    /// Scale gap between a square and the squares of the other lattice it is
    /// compared against.
    pub m: u32,
    /// Boundary-negligibility constant: a boundary is negligible when the
    /// mass within distance `r` of it stays below `boundary_m * r`.
    pub boundary_m: f64,
    /// Target bad-square probability.
    pub eps_b: f64,
    /// Quantile level for the pairwise distance function.
    pub beta: f64,
    /// Per-trial exceptional-mass bound, as a fraction of the total mass.
    pub delta2: f64,
    /// Monte-Carlo trial count.
    pub trials: u32,
    pub seed: u64,
}

impl Default for TbConfig {
    fn default() -> Self {
        let delta2 = 0.5;
        TbConfig {
            m: 2,
            boundary_m: 10.0,
            eps_b: 0.9,
            beta: (1.0 - delta2) * (1.0 - delta2) / 4.0,
            delta2,
            trials: 200,
            seed: 0,
        }
    }
}

impl TbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::invalid("scale gap m must be at least 1"));
        }
        if !(self.boundary_m > 0.0 && self.boundary_m.is_finite()) {
            return Err(Error::invalid("boundary constant must be positive"));
        }
        for (name, v) in [
            ("eps_b", self.eps_b),
            ("beta", self.beta),
            ("delta2", self.delta2),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1)")));
            }
        }
        if self.trials < 1 {
            return Err(Error::invalid("trial count must be at least 1"));
        }
        Ok(())
    }
}

/// One row of the suite report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TbReportRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant_recorded: Option<f64>,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation_rejects_out_of_range_knobs() {
        assert!(TbConfig::default().validate().is_ok());
        assert!(TbConfig { m: 0, ..TbConfig::default() }.validate().is_err());
        assert!(
            TbConfig { boundary_m: 0.0, ..TbConfig::default() }
                .validate()
                .is_err()
        );
        assert!(
            TbConfig { delta2: 1.0, ..TbConfig::default() }
                .validate()
                .is_err()
        );
        assert!(
            TbConfig { beta: -0.1, ..TbConfig::default() }
                .validate()
                .is_err()
        );
        assert!(
            TbConfig { trials: 0, ..TbConfig::default() }
                .validate()
                .is_err()
        );
    }
}
