//! Embedded manifolds `M ⊂ R^n` together with their closest-point projection.
//!
//! Points and tangent vectors are carried as ambient vectors (`Vector3` for
//! the sphere, `Matrix3` for rotations). The closest-point projection is
//! exposed through [`EmbeddedManifold::linearize`], which returns a
//! [`ProjectionJet`]: the projected value together with the first and second
//! differentials of the projection at the same ambient point. Because the
//! projection is the gradient of `x ↦ |x|²/2 - dist(x, M)²/2`, its first
//! differential is self-adjoint and its second differential is a symmetric
//! bilinear map whose pairing with a third vector is fully symmetric.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SMatrix};

use crate::error::{Error, Result};

mod so3;
mod sphere;

pub use so3::{RotationMatrix, SpecialOrthogonal};
pub use sphere::{Sphere, SpherePoint};

/// Tolerance used when checking that a point lies on a manifold.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Finite-dimensional Euclidean vector space with a fixed basis.
pub trait Ambient:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    const DIM: usize;

    fn zero() -> Self;
    fn dot(&self, other: &Self) -> f64;
    /// Coordinates, column-major for matrices.
    fn coords(&self) -> &[f64];
    fn coords_mut(&mut self) -> &mut [f64];

    fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    fn max_abs(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn from_coords(c: &[f64]) -> Self {
        let mut v = Self::zero();
        v.coords_mut().copy_from_slice(c);
        v
    }

    /// `i`-th canonical basis vector.
    fn unit(i: usize) -> Self {
        let mut v = Self::zero();
        v.coords_mut()[i] = 1.0;
        v
    }
}

impl<const R: usize, const C: usize> Ambient for SMatrix<f64, R, C> {
    const DIM: usize = R * C;

    fn zero() -> Self {
        SMatrix::zeros()
    }

    fn dot(&self, other: &Self) -> f64 {
        SMatrix::dot(self, other)
    }

    fn coords(&self) -> &[f64] {
        self.as_slice()
    }

    fn coords_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }
}

/// Closest-point projection linearised at one ambient point.
pub trait ProjectionJet<P> {
    /// `P(y)`.
    fn value(&self) -> P;
    /// `dP(y)[xi]`.
    fn differential(&self, xi: &P) -> P;
    /// `d²P(y)[a, b]`, symmetric in `a` and `b`.
    fn second_differential(&self, a: &P, b: &P) -> P;
}

pub trait EmbeddedManifold: Copy + Debug + Default + Send + Sync + 'static {
    type Point: Ambient;
    type Jet: ProjectionJet<Self::Point>;

    const NAME: &'static str;
    const INTRINSIC_DIM: usize;
    /// Injectivity radius of the exponential map in the embedding metric.
    const INJECTIVITY_RADIUS: f64;
    /// Largest admissible pairwise distance between the nodal values of one
    /// element for the geodesic (weighted mean) scheme to be well posed.
    const SPREAD_BOUND: f64;

    const AMBIENT_DIM: usize = <Self::Point as Ambient>::DIM;

    /// Projection together with its first two differentials at `y`.
    fn linearize(&self, y: &Self::Point) -> Result<Self::Jet>;

    /// Closest point on the manifold.
    fn project(&self, q: &Self::Point) -> Result<Self::Point> {
        Ok(self.linearize(q)?.value())
    }

    /// `dP(y)[xi]`.
    fn project_differential(&self, y: &Self::Point, xi: &Self::Point) -> Result<Self::Point> {
        Ok(self.linearize(y)?.differential(xi))
    }

    /// Distance-like residual that vanishes exactly on the manifold.
    fn membership_residual(&self, p: &Self::Point) -> f64;

    fn check_membership(&self, p: &Self::Point) -> Result<()> {
        let r = self.membership_residual(p);
        if r <= MEMBERSHIP_TOL {
            Ok(())
        } else {
            Err(Error::NotOnManifold(r))
        }
    }

    /// Orthogonal projection of `v` onto the tangent space at `p ∈ M`.
    fn tangent_project(&self, p: &Self::Point, v: &Self::Point) -> Self::Point;

    /// Matrix of [`EmbeddedManifold::tangent_project`] in ambient coordinates.
    fn tangent_projector(&self, p: &Self::Point) -> Result<DMatrix<f64>> {
        self.check_membership(p)?;
        let n = Self::AMBIENT_DIM;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.tangent_project(p, &Self::Point::unit(j));
            for (i, x) in col.coords().iter().enumerate() {
                m[(i, j)] = *x;
            }
        }
        Ok(m)
    }

    /// Residual of the tangency condition for `v` at `p`.
    fn tangency_residual(&self, p: &Self::Point, v: &Self::Point) -> f64 {
        (*v - self.tangent_project(p, v)).norm()
    }

    /// Geodesic distance in the metric induced by the embedding.
    fn distance(&self, p: &Self::Point, q: &Self::Point) -> f64;

    fn exp(&self, p: &Self::Point, v: &Self::Point) -> Self::Point;

    fn log(&self, p: &Self::Point, q: &Self::Point) -> Result<Self::Point>;
}

/// Tangent vector stored in ambient coordinates together with its base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector<P> {
    pub base: P,
    pub vector: P,
}

impl<P: Ambient> TangentVector<P> {
    /// Checks that `vector` is tangent at `base` (residual ≤ 1e-10).
    pub fn new<M: EmbeddedManifold<Point = P>>(manifold: &M, base: P, vector: P) -> Result<Self> {
        manifold.check_membership(&base)?;
        let r = manifold.tangency_residual(&base, &vector);
        if r > MEMBERSHIP_TOL * (1.0 + vector.norm()) {
            return Err(Error::NotOnManifold(r));
        }
        Ok(TangentVector { base, vector })
    }
}
