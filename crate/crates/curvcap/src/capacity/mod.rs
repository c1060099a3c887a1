//! Capacity estimation from below: linear-growth constraint sets, the
//! mass-vs-curvature functional, closed-form optimal rescaling, and a
//! projected multiplicative-ascent optimizer that returns a near-extremal
//! admissible measure with extremality diagnostics.

pub mod growth;
pub mod melnikov;
pub mod optimize;

pub use growth::{project_growth, GrowthConstraintSet};
pub use melnikov::{melnikov_functional, optimal_scaling};
pub use optimize::{
    extremal_diagnostics, optimize_gplus, potential_normalized_bound, trace_csv, CapacityEstimate,
    ExtremalDiagnostics, OptimizeConfig, TraceRow, TRACE_CSV_HEADER,
};
