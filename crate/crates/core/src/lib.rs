//! Magnetic geodesic flows on real hypersurfaces of ℂⁿ.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod complex;
pub mod error;
pub mod export;
pub mod flow;
pub mod integrator;
pub mod invariants;
pub mod revolution;
pub mod sampling;
pub mod sphere;
pub mod surface;
pub mod symmetry;

pub use complex::ComplexVector;
pub use error::{MagflowError, Result};
pub use surface::{EllipsoidSpec, LevelSet, PhaseState};
