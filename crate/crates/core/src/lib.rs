//! Manifold-valued finite elements.

pub mod energy;
pub mod error;
pub mod fe_basis;
pub mod interpolation;
pub mod manifolds;
pub mod mesh;
pub mod norms;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
