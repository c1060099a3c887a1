//! Numerics for curvature of planar measures, Cauchy transforms, and
//! capacity-style variational estimates on discrete atomic measures.
//!
//! The crate is organized in layers:
//!
//! * [`plane`]: points, atomic measures, squares, dyadic lattices, segments.
//! * [`kernels`]: Menger curvature, curvature sums, truncated / regularized /
//!   maximal Cauchy transforms, radial maximal operator, the curvature
//!   potential `U`.
//! * [`capacity`]: growth constraints and the variational lower-bound
//!   optimizer for the curvature-penalized mass functional.
//! * [`pipeline`]: level sets, Whitney decompositions, the circle-measure
//!   construction, and exceptional-set bookkeeping.
//! * [`tb`]: suppressed kernels, random dyadic lattices, adapted martingale
//!   decompositions, Carleson packing, good/bad square sampling.
//!
//! All heavy reductions run through [`sum`], which fixes the summation tree,
//! so results are bit-identical across thread counts.

pub mod capacity;
pub mod error;
pub mod kernels;
pub mod pipeline;
pub mod plane;
pub mod sum;
pub mod tb;

pub use error::{Error, Result};

// Book chapters double as doc-tests so the guide cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/tb.md")]
    mod tb {}
}
