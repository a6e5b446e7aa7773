//! Lagrange finite element spaces: reference shape functions, quadrature
//! rules and the global node layout over a mesh.

mod quadrature;
mod shape;
mod space;

pub use quadrature::{gauss_legendre, quadrature_rule, QuadratureRule, MAX_QUADRATURE_DEGREE};
pub use shape::{
    reference_basis, shape_gradients, shape_values, LocalNode, NodeEntity, ReferenceBasis, MAX_ORDER,
};
pub use space::{LagrangeSpace, PointEval};
