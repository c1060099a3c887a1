//! Planar primitives: points, atomic measures, squares, dyadic lattices,
//! segment families, balls, and covering constructions.

pub mod cover;
pub mod dyadic;
pub mod generators;
pub mod measure;
pub mod point;
pub mod region;
pub mod segment;
pub mod square;

pub use cover::{ball_mass, vitali_5r, Ball};
pub use dyadic::{DyadicLattice, DyadicSquare};
pub use generators::{cantor_set, discretize_segments};
pub use measure::{AtomicMeasure, ComplexAtomicMeasure};
pub use point::Point;
pub use region::{RegionMember, RegionUnion};
pub use segment::SegmentFamily;
pub use square::Square;
