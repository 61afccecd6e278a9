//! Desk-scale analysis of energy concentration for harmonic map fields into
//! the 2-sphere: mollified monotone energies and their tensors, best symmetry
//! planes, bubble-center submanifolds from a Newton solve, annular/bubble
//! region certification, and bubble-tree energy accounting on 2-D slices.

pub mod scalar;
#[macro_use]
pub mod linalg;
pub mod geometry;
pub mod quad;

pub mod bestfit;
pub mod energy;
pub mod fields;
pub mod identity;
pub mod mollifier;
pub mod regions;
pub mod report;
pub mod rng;
pub mod selfcheck;

/// Scalar used by the analysis layers.
pub type Real = f64;
/// Point / vector in the ambient space (dimension <= 4).
pub type Point = linalg::SVec<Real>;
/// Small dense matrix.
pub type Matrix = linalg::SMat<Real>;
pub type Plane = geometry::Plane<Real>;
pub type AffinePlane = geometry::AffinePlane<Real>;
pub type HeatMollifier = mollifier::HeatMollifier<Real>;

pub use fields::{BubbleParams, MapField};
