//! Integral structures on orbifold quantum cohomology.
//!
//! The crate computes inertia-stack data and Chen-Ruan cohomology, Gamma-class
//! and Todd characteristic classes with Kawasaki-Riemann-Roch pairings, Galois
//! (local monodromy) actions, truncated quantum D-modules with their
//! fundamental solutions and J-functions, Hard Lefschetz diagnostics, central
//! charges / integral periods, and the coordinate-change predictions of the
//! crepant resolution conjecture for quotient singularities.

pub mod error;
pub mod scalar;
pub mod special;
pub mod linalg;
pub mod series;
pub mod graded;
pub mod orbifold;
pub mod kclass;
pub mod gamma_frame;
pub mod io;
pub mod fixtures;
pub mod galois;
pub mod lefschetz;
pub mod qdm;
pub mod charges;
pub mod crepant;

pub use error::{Error, Result};
pub use scalar::Scalar;
