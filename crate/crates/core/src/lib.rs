//! Numerical laboratory for the fractional Poisson problem
//! (-Δ)^s u = f in Ω, u = 0 outside Ω, and its transition to the classical
//! Laplacian as s → 1.

pub mod bounds;
pub mod closedform;
pub mod derivative;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kernels;
pub mod operators;
pub mod point;
pub mod radial;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
pub use closedform::{TorsionFamily, TorsionField};
pub use field::{CompactField, FnField, ScalarField, Smoothness, Support};
pub use geometry::{Domain, Ellipsoid};
pub use kernels::KernelFamily;
pub use point::Point;
pub use radial::RadialTable;
pub use quadrature::{IntegralResult, QuadConfig};
