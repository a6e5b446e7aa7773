//! Euclidean, projection-based and geodesic interpolation of nodal values,
//! and interpolation of tangent vector fields along a discrete map.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::fe_basis::{LagrangeSpace, PointEval};
use crate::manifolds::{Ambient, EmbeddedManifold, ProjectionJet, TangentVector};
use crate::mesh::Point2;

const MEAN_TOL: f64 = 1e-13;
const MEAN_MAX_ITER: usize = 100;
/// Reference-coordinate step for derivatives of geodesic interpolants.
const GEODESIC_FD_STEP: f64 = 1e-6;

/// How nodal values on a manifold are interpolated inside an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Euclidean interpolation followed by the closest-point projection.
    Projection,
    /// Weighted Riemannian centre of mass with the Lagrange basis as weights.
    Geodesic,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Projection => "projection",
            Scheme::Geodesic => "geodesic",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "projection" => Ok(Scheme::Projection),
            "geodesic" => Ok(Scheme::Geodesic),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Columns `∂v/∂x₀` and `∂v/∂x₁` of the world-coordinate derivative.
pub type Differential<P> = [P; 2];

/// Vector-valued Lagrange interpolant `Σ c_i φ_i`.
#[derive(Debug, Clone)]
pub struct EuclideanInterpolant<P: Ambient> {
    space: Arc<LagrangeSpace>,
    coefficients: Vec<P>,
}

impl<P: Ambient> EuclideanInterpolant<P> {
    pub fn new(space: Arc<LagrangeSpace>, coefficients: Vec<P>) -> Result<Self> {
        if coefficients.len() != space.node_count() {
            return Err(Error::DimensionMismatch {
                expected: space.node_count(),
                found: coefficients.len(),
            });
        }
        Ok(EuclideanInterpolant { space, coefficients })
    }

    pub fn coefficients(&self) -> &[P] {
        &self.coefficients
    }

    pub fn space(&self) -> &Arc<LagrangeSpace> {
        &self.space
    }

    pub fn evaluate(&self, e: usize, ref_pt: Point2) -> Result<P> {
        check_ref(&self.space, e, ref_pt)?;
        let mut buf = PointEval::default();
        self.space.evaluate_at(e, ref_pt, &mut buf);
        Ok(combine(&self.coefficients, self.space.element_dofs(e), &buf.values))
    }

    pub fn evaluate_gradient(&self, e: usize, ref_pt: Point2) -> Result<Differential<P>> {
        check_ref(&self.space, e, ref_pt)?;
        let mut buf = PointEval::default();
        self.space.evaluate_at(e, ref_pt, &mut buf);
        Ok(combine_gradient(&self.coefficients, self.space.element_dofs(e), &buf.gradients))
    }
}

/// Nodal interpolation `Q_{R^n} f = Σ f(ξ_i) φ_i`.
pub fn euclidean_interpolate<P: Ambient>(
    f: impl Fn(Point2) -> P,
    space: Arc<LagrangeSpace>,
) -> EuclideanInterpolant<P> {
    let coefficients = space.nodes().iter().map(|&x| f(x)).collect();
    EuclideanInterpolant { space, coefficients }
}

fn check_ref(space: &LagrangeSpace, e: usize, p: Point2) -> Result<()> {
    if space.mesh().element(e).kind.contains_reference_point(p) {
        Ok(())
    } else {
        Err(Error::OutsideReferenceElement(p.x, p.y))
    }
}

pub(crate) fn combine<P: Ambient>(coeffs: &[P], dofs: &[usize], weights: &[f64]) -> P {
    let mut y = P::zero();
    for (&g, &w) in dofs.iter().zip(weights) {
        y += coeffs[g] * w;
    }
    y
}

pub(crate) fn combine_gradient<P: Ambient>(
    coeffs: &[P],
    dofs: &[usize],
    grads: &[Vector2<f64>],
) -> Differential<P> {
    let mut d = [P::zero(); 2];
    for (&g, grad) in dofs.iter().zip(grads) {
        d[0] += coeffs[g] * grad.x;
        d[1] += coeffs[g] * grad.y;
    }
    d
}

/// A finite element map into a manifold: one manifold-valued coefficient per
/// Lagrange node plus the interpolation scheme.
#[derive(Debug, Clone)]
pub struct DiscreteMap<M: EmbeddedManifold> {
    manifold: M,
    space: Arc<LagrangeSpace>,
    scheme: Scheme,
    coefficients: Vec<M::Point>,
}

impl<M: EmbeddedManifold> DiscreteMap<M> {
    /// Checks coefficient count and membership. The geodesic scheme also
    /// requires every element's nodal values to be pairwise no farther apart
    /// than [`EmbeddedManifold::SPREAD_BOUND`].
    pub fn new(
        manifold: M,
        space: Arc<LagrangeSpace>,
        scheme: Scheme,
        coefficients: Vec<M::Point>,
    ) -> Result<Self> {
        if coefficients.len() != space.node_count() {
            return Err(Error::DimensionMismatch {
                expected: space.node_count(),
                found: coefficients.len(),
            });
        }
        for c in &coefficients {
            manifold.check_membership(c)?;
        }
        let map = DiscreteMap {
            manifold,
            space,
            scheme,
            coefficients,
        };
        if scheme == Scheme::Geodesic {
            let (element, spread) = map.max_element_spread();
            if spread > M::SPREAD_BOUND + 1e-12 {
                return Err(Error::CoefficientsTooFar {
                    element,
                    spread,
                    bound: M::SPREAD_BOUND,
                });
            }
        }
        Ok(map)
    }

    /// Samples `f` at the Lagrange nodes.
    pub fn nodal_sample(
        manifold: M,
        space: Arc<LagrangeSpace>,
        scheme: Scheme,
        f: impl Fn(Point2) -> M::Point,
    ) -> Result<Self> {
        let coefficients = space.nodes().iter().map(|&x| f(x)).collect();
        Self::new(manifold, space, scheme, coefficients)
    }

    /// Same space and scheme, new coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<M::Point>) -> Result<Self> {
        Self::new(self.manifold, self.space.clone(), self.scheme, coefficients)
    }

    /// Skips all validation; callers guarantee the invariants.
    pub(crate) fn with_coefficients_unchecked(&self, coefficients: Vec<M::Point>) -> Self {
        DiscreteMap {
            manifold: self.manifold,
            space: self.space.clone(),
            scheme: self.scheme,
            coefficients,
        }
    }

    pub fn manifold(&self) -> &M {
        &self.manifold
    }

    pub fn space(&self) -> &Arc<LagrangeSpace> {
        &self.space
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn coefficients(&self) -> &[M::Point] {
        &self.coefficients
    }

    /// `Q_{R^n}` of this map: the same coefficients read as a Euclidean interpolant.
    pub fn euclidean_part(&self) -> EuclideanInterpolant<M::Point> {
        EuclideanInterpolant {
            space: self.space.clone(),
            coefficients: self.coefficients.clone(),
        }
    }

    /// Element with the largest pairwise distance between nodal values.
    pub fn max_element_spread(&self) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for e in 0..self.space.element_count() {
            let dofs = self.space.element_dofs(e);
            for (i, &a) in dofs.iter().enumerate() {
                for &b in &dofs[i + 1..] {
                    let d = self.manifold.distance(&self.coefficients[a], &self.coefficients[b]);
                    if d > worst.1 {
                        worst = (e, d);
                    }
                }
            }
        }
        worst
    }

    /// Value at reference coordinates `ref_pt` of element `e`.
    pub fn evaluate(&self, e: usize, ref_pt: Point2) -> Result<M::Point> {
        check_ref(&self.space, e, ref_pt)?;
        let mut buf = PointEval::default();
        self.space.evaluate_at(e, ref_pt, &mut buf);
        self.value_at(e, &buf)
    }

    /// World-coordinate derivative at reference coordinates `ref_pt` of element `e`.
    pub fn evaluate_gradient(&self, e: usize, ref_pt: Point2) -> Result<Differential<M::Point>> {
        check_ref(&self.space, e, ref_pt)?;
        let mut buf = PointEval::default();
        self.space.evaluate_at(e, ref_pt, &mut buf);
        Ok(self.value_and_gradient_at(e, &buf)?.1)
    }

    /// Value from precomputed point data of element `e`.
    pub fn value_at(&self, e: usize, pt: &PointEval) -> Result<M::Point> {
        let dofs = self.space.element_dofs(e);
        match self.scheme {
            Scheme::Projection => self.manifold.project(&combine(&self.coefficients, dofs, &pt.values)),
            Scheme::Geodesic => self.weighted_mean(dofs, &pt.values),
        }
    }

    /// Value and world derivative from precomputed point data of element `e`.
    pub fn value_and_gradient_at(
        &self,
        e: usize,
        pt: &PointEval,
    ) -> Result<(M::Point, Differential<M::Point>)> {
        let dofs = self.space.element_dofs(e);
        match self.scheme {
            Scheme::Projection => {
                let y = combine(&self.coefficients, dofs, &pt.values);
                let g = combine_gradient(&self.coefficients, dofs, &pt.gradients);
                let jet = self.manifold.linearize(&y)?;
                Ok((jet.value(), [jet.differential(&g[0]), jet.differential(&g[1])]))
            }
            Scheme::Geodesic => {
                let value = self.weighted_mean(dofs, &pt.values)?;
                let basis = self.space.basis(e);
                let mut w = vec![0.0; basis.len()];
                let mut ref_derivs = [M::Point::zero(); 2];
                for (axis, d) in ref_derivs.iter_mut().enumerate() {
                    let mut step = Point2::zeros();
                    step[axis] = GEODESIC_FD_STEP;
                    basis.values_into(pt.ref_point + step, &mut w);
                    let plus = self.weighted_mean(dofs, &w)?;
                    basis.values_into(pt.ref_point - step, &mut w);
                    let minus = self.weighted_mean(dofs, &w)?;
                    *d = (plus - minus) * (0.5 / GEODESIC_FD_STEP);
                }
                // d/dx_j = sum_k d/dxi_k * (J^{-1})_{kj}
                let inv = &pt.inverse_jacobian;
                let grad = [
                    ref_derivs[0] * inv[(0, 0)] + ref_derivs[1] * inv[(1, 0)],
                    ref_derivs[0] * inv[(0, 1)] + ref_derivs[1] * inv[(1, 1)],
                ];
                Ok((value, grad))
            }
        }
    }

    /// Weighted Riemannian centre of mass of the element's nodal values,
    /// by the fixed-point iteration `q ← exp_q(Σ w_i log_q c_i)` started at
    /// the projected Euclidean average.
    fn weighted_mean(&self, dofs: &[usize], weights: &[f64]) -> Result<M::Point> {
        let m = &self.manifold;
        let mut q = match m.project(&combine(&self.coefficients, dofs, weights)) {
            Ok(q) => q,
            Err(_) => {
                // fall back to the node with the largest weight
                let (k, _) = weights
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (k, &w)| if w > acc.1 { (k, w) } else { acc });
                self.coefficients[dofs[k]]
            }
        };
        let mut last = f64::INFINITY;
        for _ in 0..MEAN_MAX_ITER {
            let mut v = M::Point::zero();
            for (&g, &w) in dofs.iter().zip(weights) {
                if w != 0.0 {
                    v += m.log(&q, &self.coefficients[g])? * w;
                }
            }
            last = v.norm();
            if !last.is_finite() {
                break;
            }
            q = m.exp(&q, &v);
            if last <= MEAN_TOL {
                return Ok(q);
            }
        }
        Err(Error::MeanNotConverged {
            iterations: MEAN_MAX_ITER,
            last_update: last,
        })
    }
}

/// Nodal tangent vectors along a projection-based discrete map.
#[derive(Debug, Clone)]
pub struct TangentField<M: EmbeddedManifold> {
    base: DiscreteMap<M>,
    vectors: Vec<M::Point>,
}

impl<M: EmbeddedManifold> TangentField<M> {
    pub fn new(base: DiscreteMap<M>, vectors: Vec<M::Point>) -> Result<Self> {
        if base.scheme() != Scheme::Projection {
            return Err(Error::RequiresProjectionScheme);
        }
        if vectors.len() != base.coefficients().len() {
            return Err(Error::DimensionMismatch {
                expected: base.coefficients().len(),
                found: vectors.len(),
            });
        }
        for (c, v) in base.coefficients().iter().zip(&vectors) {
            TangentVector::new(base.manifold(), *c, *v)?;
        }
        Ok(TangentField { base, vectors })
    }

    pub(crate) fn new_unchecked(base: DiscreteMap<M>, vectors: Vec<M::Point>) -> Self {
        TangentField { base, vectors }
    }

    pub fn zeros(base: DiscreteMap<M>) -> Self {
        let n = base.coefficients().len();
        TangentField {
            base,
            vectors: vec![M::Point::zero(); n],
        }
    }

    pub fn base(&self) -> &DiscreteMap<M> {
        &self.base
    }

    pub fn vectors(&self) -> &[M::Point] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<M::Point> {
        self.vectors
    }

    /// Tangent projection, at the base map's value, of the Euclidean
    /// interpolant of the nodal vectors.
    pub fn evaluate_tangent(&self, e: usize, ref_pt: Point2) -> Result<TangentVector<M::Point>> {
        let space = self.base.space();
        check_ref(space, e, ref_pt)?;
        let mut buf = PointEval::default();
        space.evaluate_at(e, ref_pt, &mut buf);
        let base = self.base.value_at(e, &buf)?;
        let v = combine(&self.vectors, space.element_dofs(e), &buf.values);
        Ok(TangentVector {
            base,
            vector: self.base.manifold().tangent_project(&base, &v),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::testing::*;
    use crate::manifolds::{Sphere, SpecialOrthogonal};
    use crate::mesh::{Element, ElementKind, Mesh};
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_triangle(order: usize) -> Arc<LagrangeSpace> {
        let v = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let mesh = Mesh::from_parts(v, vec![Element::triangle(0, [0, 1, 2])]).unwrap();
        Arc::new(LagrangeSpace::new(Arc::new(mesh), order).unwrap())
    }

    fn coarse_space(order: usize) -> Arc<LagrangeSpace> {
        Arc::new(LagrangeSpace::new(Arc::new(Mesh::build_coarse_grid()), order).unwrap())
    }

    fn random_ref(kind: ElementKind, rng: &mut impl Rng) -> Point2 {
        loop {
            let p = Point2::new(rng.gen(), rng.gen());
            if kind.contains_reference_point(p) {
                return p;
            }
        }
    }

    /// Smooth sphere-valued map with small variation over the coarse grid.
    fn gentle_sphere_map(x: Point2) -> Vector3<f64> {
        let v = Vector3::new(0.1 * x.x, 0.08 * x.y + 0.02 * x.x * x.y, 1.0);
        v / v.norm()
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("projection".parse::<Scheme>().unwrap(), Scheme::Projection);
        assert_eq!(Scheme::Geodesic.to_string(), "geodesic");
        assert!("foo".parse::<Scheme>().is_err());
    }

    #[test]
    fn constant_sample() {
        let p = Vector3::new(0.0, 0.6, 0.8);
        let u = DiscreteMap::nodal_sample(Sphere, coarse_space(2), Scheme::Projection, |_| p).unwrap();
        assert!(u.coefficients().iter().all(|c| *c == p));
        let g = u.evaluate_gradient(3, Point2::new(0.2, 0.2)).unwrap();
        assert!(g[0].norm() < 1e-15 && g[1].norm() < 1e-15);
    }

    #[test]
    fn off_manifold_sample_is_rejected() {
        let r = DiscreteMap::nodal_sample(Sphere, coarse_space(1), Scheme::Projection, |_| Vector3::new(0.0, 0.0, 1.1));
        assert!(matches!(r, Err(Error::NotOnManifold(_))));
    }

    #[test]
    fn edge_midpoint_both_schemes() {
        let space = single_triangle(1);
        let coeffs = vec![Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0), Vector3::new(1.0, 0.0, 0.0)];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for scheme in [Scheme::Projection, Scheme::Geodesic] {
            let u = DiscreteMap::new(Sphere, space.clone(), scheme, coeffs.clone()).unwrap();
            let v = u.evaluate(0, Point2::new(0.5, 0.0)).unwrap();
            assert!((v - Vector3::new(s, s, 0.0)).norm() < 1e-14, "{scheme}");
        }
    }

    #[test]
    fn so3_midpoint_both_schemes() {
        let space = single_triangle(1);
        let rz = |t: f64| Matrix3::new(t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0);
        // slerp oracle: the geodesic midpoint of I and R_z(π/2) rotates by half the angle
        let expected = axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_4);
        let coeffs = vec![Matrix3::identity(), rz(std::f64::consts::FRAC_PI_2), Matrix3::identity()];
        for scheme in [Scheme::Projection, Scheme::Geodesic] {
            let u = DiscreteMap::new(SpecialOrthogonal, space.clone(), scheme, coeffs.clone()).unwrap();
            let v = u.evaluate(0, Point2::new(0.5, 0.0)).unwrap();
            assert!((v - expected).norm() < 1e-12, "{scheme}");
        }
    }

    #[test]
    fn node_reproduction() {
        for r in 1..=3 {
            let space = coarse_space(r);
            for scheme in [Scheme::Projection, Scheme::Geodesic] {
                let u = DiscreteMap::nodal_sample(Sphere, space.clone(), scheme, gentle_sphere_map).unwrap();
                for e in 0..space.element_count() {
                    for (node, &g) in space.basis(e).nodes().iter().zip(space.element_dofs(e)) {
                        let v = u.evaluate(e, node.reference).unwrap();
                        assert!((v - u.coefficients()[g]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn geodesic_spread_guard() {
        let space = single_triangle(1);
        let coeffs = vec![Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 0.0, 1.0), Vector3::new(-0.6, 0.8, 0.0)];
        assert!(matches!(
            DiscreteMap::new(Sphere, space.clone(), Scheme::Geodesic, coeffs.clone()),
            Err(Error::CoefficientsTooFar { .. })
        ));
        assert!(DiscreteMap::new(Sphere, space, Scheme::Projection, coeffs).is_ok());
    }

    #[test]
    fn projection_gradient_is_tangent_and_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for r in 1..=3 {
            let space = coarse_space(r);
            for scheme in [Scheme::Projection, Scheme::Geodesic] {
                let u = DiscreteMap::nodal_sample(Sphere, space.clone(), scheme, gentle_sphere_map).unwrap();
                for _ in 0..20 {
                    let e = rng.gen_range(0..space.element_count());
                    let kind = space.mesh().element(e).kind;
                    let p = random_ref(kind, &mut rng);
                    let p = p * 0.9 + kind.reference_center() * 0.1;
                    let v = u.evaluate(e, p).unwrap();
                    let g = u.evaluate_gradient(e, p).unwrap();
                    for col in &g {
                        assert!(col.dot(&v).abs() < 1e-9);
                    }
                    // finite differences in world coordinates through the inverse geometry map
                    let jac = space.mesh().jacobian(e, p).unwrap();
                    let inv = jac.try_inverse().unwrap();
                    let h = 1e-5;
                    for axis in 0..2 {
                        let mut dx = Vector2::zeros();
                        dx[axis] = h;
                        let dref = inv * dx;
                        let fd = (u.evaluate(e, p + dref).unwrap() - u.evaluate(e, p - dref).unwrap()) / (2.0 * h);
                        assert!((fd - g[axis]).norm() < 1e-6, "{scheme} r={r}: {}", (fd - g[axis]).norm());
                    }
                }
            }
        }
    }

    #[test]
    fn euclidean_interpolation_reproduces_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for r in 1..=3 {
            let space = coarse_space(r);
            let poly = move |x: Point2| {
                let mut v = Vector3::new(1.0 + x.x - 0.5 * x.y, 0.3 * x.y, 2.0);
                if r >= 2 {
                    v += Vector3::new(x.x * x.y, x.x * x.x, -x.y * x.y) * 0.1;
                }
                if r >= 3 {
                    v += Vector3::new(x.x * x.x * x.y, x.y.powi(3), x.x.powi(3)) * 0.01;
                }
                v
            };
            let q = euclidean_interpolate(poly, space.clone());
            for _ in 0..20 {
                let e = rng.gen_range(0..space.element_count());
                let p = random_ref(space.mesh().element(e).kind, &mut rng);
                let x = space.mesh().geometry_map(e, p).unwrap();
                assert!((q.evaluate(e, p).unwrap() - poly(x)).norm() < 1e-11);
            }
            let c = euclidean_interpolate(|_| Vector3::new(1.0, 2.0, 3.0), space.clone());
            assert!((c.evaluate(0, Point2::new(0.3, 0.3)).unwrap() - Vector3::new(1.0, 2.0, 3.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn euclidean_part_of_projection_interpolant() {
        let space = coarse_space(2);
        let u = DiscreteMap::nodal_sample(Sphere, space.clone(), Scheme::Projection, gentle_sphere_map).unwrap();
        let direct = euclidean_interpolate(gentle_sphere_map, space);
        assert_eq!(u.euclidean_part().coefficients(), direct.coefficients());
    }

    #[test]
    fn equivariance_under_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let space = coarse_space(2);
        for scheme in [Scheme::Projection, Scheme::Geodesic] {
            let u = DiscreteMap::nodal_sample(Sphere, space.clone(), scheme, gentle_sphere_map).unwrap();
            let r = random_rotation(&mut rng);
            let ru = u.with_coefficients(u.coefficients().iter().map(|c| r * c).collect()).unwrap();
            for _ in 0..10 {
                let e = rng.gen_range(0..space.element_count());
                let p = random_ref(space.mesh().element(e).kind, &mut rng);
                let a = ru.evaluate(e, p).unwrap();
                let b = r * u.evaluate(e, p).unwrap();
                assert!((a - b).norm() < 1e-11);
            }
        }
        let f = |x: Point2| axis_angle(Vector3::new(1.0, 0.5, 0.2), 0.1 * x.x) * axis_angle(Vector3::y(), 0.1 * x.y);
        for scheme in [Scheme::Projection, Scheme::Geodesic] {
            let u = DiscreteMap::nodal_sample(SpecialOrthogonal, space.clone(), scheme, f).unwrap();
            let r = random_rotation(&mut rng);
            let ru = u.with_coefficients(u.coefficients().iter().map(|c| r * c).collect()).unwrap();
            for _ in 0..10 {
                let e = rng.gen_range(0..space.element_count());
                let p = random_ref(space.mesh().element(e).kind, &mut rng);
                assert!((ru.evaluate(e, p).unwrap() - r * u.evaluate(e, p).unwrap()).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn schemes_agree_on_linear_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let space = single_triangle(1);
        for _ in 0..20 {
            let a = random_unit(&mut rng);
            let b = random_unit(&mut rng);
            if Sphere.distance(&a, &b) > 1.4 {
                continue;
            }
            let coeffs = vec![a, b, a];
            let p = DiscreteMap::new(Sphere, space.clone(), Scheme::Projection, coeffs.clone()).unwrap();
            let g = DiscreteMap::new(Sphere, space.clone(), Scheme::Geodesic, coeffs).unwrap();
            for t in [0.1, 0.37, 0.5, 0.81] {
                let pt = Point2::new(t, 0.0);
                let vp = p.evaluate(0, pt).unwrap();
                let vg = g.evaluate(0, pt).unwrap();
                // both lie on the great circle through a and b
                let n = a.cross(&b).normalize();
                assert!(vp.dot(&n).abs() < 1e-12 && vg.dot(&n).abs() < 1e-12);
                if t == 0.5 {
                    assert!((vp - vg).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn projection_values_lie_on_manifold() {
        let space = coarse_space(3);
        let u = DiscreteMap::nodal_sample(Sphere, space.clone(), Scheme::Projection, gentle_sphere_map).unwrap();
        let mut buf = PointEval::default();
        for e in 0..space.element_count() {
            space
                .integrate_element(e, 6, &mut buf, |pt, _| {
                    let v = u.value_at(e, pt)?;
                    assert!(Sphere.membership_residual(&v) < 1e-10);
                    Ok(())
                })
                .unwrap();
        }
    }

    #[test]
    fn tangent_field_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let space = coarse_space(2);
        let u = DiscreteMap::nodal_sample(Sphere, space.clone(), Scheme::Projection, gentle_sphere_map).unwrap();
        let zero = TangentField::zeros(u.clone());
        assert_eq!(zero.evaluate_tangent(0, Point2::new(0.2, 0.3)).unwrap().vector, Vector3::zeros());

        let vectors: Vec<_> = u
            .coefficients()
            .iter()
            .map(|c| Sphere.tangent_project(c, &random_unit(&mut rng)))
            .collect();
        let field = TangentField::new(u.clone(), vectors.clone()).unwrap();
        for e in 0..space.element_count() {
            for (node, &g) in space.basis(e).nodes().iter().zip(space.element_dofs(e)) {
                let t = field.evaluate_tangent(e, node.reference).unwrap();
                assert!((t.vector - vectors[g]).norm() < 1e-13);
            }
            let p = random_ref(space.mesh().element(e).kind, &mut rng);
            let t = field.evaluate_tangent(e, p).unwrap();
            assert!(t.vector.dot(&t.base).abs() < 1e-10);
        }
        let mut bad = vectors;
        bad[0] = u.coefficients()[0];
        assert!(TangentField::new(u, bad).is_err());
    }
}
