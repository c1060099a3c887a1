//! Pointwise kernels and the scalar quantities built from them: Menger
//! curvature of triples, truncated/regularized/maximal Cauchy transforms,
//! triple-sum curvature of a measure, the radial maximal function, and the
//! combined potential used for normalization.

pub mod cauchy;
pub mod curvature;
pub mod maximal;
pub mod menger;
pub mod mollifier;
pub mod mv;
pub mod potential;

pub use cauchy::{cauchy_exceedance_radius, cauchy_maximal, cauchy_truncated, cauchy_truncated_real};
pub use curvature::{
    curvature_per_atom, curvature_potential, curvature_potential_unchecked, curvature_total,
    per_atom_csv, CurvatureReport,
};
pub use maximal::maximal_radial;
pub use menger::{menger_curvature, menger_curvature_sq};
pub use mollifier::{cauchy_regularized, Mollifier};
pub use mv::{mv_csv, mv_identity_report, MvReport, MV_CSV_HEADER};
pub use potential::{potential_on_atoms, potential_u};
