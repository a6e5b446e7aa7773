//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Reference coordinates outside the reference element.
    #[error("reference point ({0}, {1}) lies outside the reference element")]
    OutsideReferenceElement(f64, f64),

    #[error("unsupported polynomial order {0} (supported: 1, 2, 3)")]
    UnsupportedOrder(usize),

    #[error("unsupported quadrature degree {0} (supported: 1..=8)")]
    UnsupportedQuadratureDegree(usize),

    /// The ambient point is too far from the manifold for the closest-point
    /// projection to be evaluated.
    #[error("point outside the projection domain: {0}")]
    OutsideProjectionDomain(String),

    /// Same as [`Error::OutsideProjectionDomain`], raised while working on a
    /// particular mesh element.
    #[error("element {element}: point outside the projection domain: {reason}")]
    ElementOutsideProjectionDomain { element: usize, reason: String },

    #[error("logarithm requested at the cut locus: {0}")]
    CutLocus(String),

    /// The weighted Riemannian centre of mass iteration did not converge.
    #[error("weighted mean did not converge after {iterations} iterations (last update {last_update:e})")]
    MeanNotConverged { iterations: usize, last_update: f64 },

    #[error("point is not on the manifold (residual {0:e})")]
    NotOnManifold(f64),

    /// Nodal coefficients of one element are too far apart for the chosen
    /// interpolation scheme.
    #[error("element {element}: coefficient spread {spread} exceeds the admissible bound {bound}")]
    CoefficientsTooFar { element: usize, spread: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("meshes do not belong to one refinement lineage")]
    NotInLineage,

    #[error("operation requires the projection-based scheme")]
    RequiresProjectionScheme,

    #[error("invalid error sequence for order estimation: {0}")]
    InvalidErrorSequence(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
