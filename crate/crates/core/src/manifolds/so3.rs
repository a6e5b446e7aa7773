//! The rotation group `SO(3) ⊂ R^{3×3}` with the Frobenius inner product.
//!
//! The closest-point projection is the orthogonal polar factor, computed by
//! the Newton iteration `Q_{k+1} = (Q_k + Q_k^{-T}) / 2`. Its differentials
//! are obtained by differentiating the iteration itself.
//!
//! Distances use the embedding metric: a rotation by angle `θ` is at
//! distance `√2·θ` from the identity.

use nalgebra::{Matrix3, Vector3};

use super::{EmbeddedManifold, ProjectionJet};
use crate::error::{Error, Result};

const HIGHAM_TOL: f64 = 1e-14;
const HIGHAM_MAX_ITER: usize = 100;
/// Angles closer than this to `π` are treated as the cut locus.
const CUT_LOCUS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpecialOrthogonal;

/// A validated rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let r = orthogonality_residual(&m);
        if r <= 1e-10 && m.determinant() > 0.0 {
            Ok(RotationMatrix(m))
        } else {
            Err(Error::NotOnManifold(r))
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0
    }
}

fn orthogonality_residual(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

fn skew(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m - m.transpose()) * 0.5
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

fn inverse_transpose(q: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    q.try_inverse()
        .map(|m| m.transpose())
        .ok_or_else(|| Error::OutsideProjectionDomain("singular iterate in polar iteration".into()))
}

fn check_domain(q: &Matrix3<f64>) -> Result<()> {
    let det = q.determinant();
    if det > 0.0 && q.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::OutsideProjectionDomain(format!("det = {det:e} is not positive")))
    }
}

/// Rotation angle in `[0, π]` of a (nearly) orthogonal matrix.
fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let s = vee(&skew(r)).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

/// Matrix logarithm of a rotation, as a skew-symmetric matrix.
fn log_rotation(r: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let theta = rotation_angle(r);
    if theta > std::f64::consts::PI - CUT_LOCUS_TOL {
        return Err(Error::CutLocus(format!("rotation angle {theta}")));
    }
    let s = theta.sin();
    let factor = if theta < 1e-5 { 1.0 + theta * theta / 6.0 } else { theta / s };
    Ok(skew(r) * factor)
}

/// Exponential of a skew-symmetric matrix (Rodrigues).
fn exp_skew(omega: &Matrix3<f64>) -> Matrix3<f64> {
    let theta = vee(omega).norm();
    let (a, b) = if theta < 1e-5 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + omega * a + omega * omega * b
}

/// Polar iteration state: the inverse transposes `Q_k^{-T}` of every iterate.
#[derive(Debug, Clone)]
pub struct PolarJet {
    value: Matrix3<f64>,
    inv_t: Vec<Matrix3<f64>>,
}

impl ProjectionJet<Matrix3<f64>> for PolarJet {
    fn value(&self) -> Matrix3<f64> {
        self.value
    }

    // E_{k+1} = (E_k - W_k E_k^T W_k) / 2 with W_k = Q_k^{-T}
    fn differential(&self, xi: &Matrix3<f64>) -> Matrix3<f64> {
        let mut e = *xi;
        for w in &self.inv_t {
            e = (e - w * e.transpose() * w) * 0.5;
        }
        e
    }

    fn second_differential(&self, a: &Matrix3<f64>, b: &Matrix3<f64>) -> Matrix3<f64> {
        let (mut e, mut f) = (*a, *b);
        let mut g = Matrix3::zeros();
        for w in &self.inv_t {
            let wew = w * e.transpose() * w;
            let wfw = w * f.transpose() * w;
            let g_next = (g - w * g.transpose() * w + wew * f.transpose() * w + wfw * e.transpose() * w) * 0.5;
            e = (e - wew) * 0.5;
            f = (f - wfw) * 0.5;
            g = g_next;
        }
        g
    }
}

impl SpecialOrthogonal {
    /// All iterates `Q_0 = a, Q_1, …` of the polar iteration up to convergence.
    pub fn polar_iterates(&self, a: &Matrix3<f64>) -> Result<Vec<Matrix3<f64>>> {
        check_domain(a)?;
        let mut out = vec![*a];
        let mut q = *a;
        for _ in 0..HIGHAM_MAX_ITER {
            let next = (q + inverse_transpose(&q)?) * 0.5;
            let step = (next - q).norm();
            out.push(next);
            q = next;
            if step <= HIGHAM_TOL {
                return Ok(out);
            }
        }
        Err(Error::OutsideProjectionDomain(format!(
            "polar iteration did not converge in {HIGHAM_MAX_ITER} steps"
        )))
    }
}

impl EmbeddedManifold for SpecialOrthogonal {
    type Point = Matrix3<f64>;
    type Jet = PolarJet;

    const NAME: &'static str = "so3";
    const INTRINSIC_DIM: usize = 3;
    const INJECTIVITY_RADIUS: f64 = std::f64::consts::PI * std::f64::consts::SQRT_2;
    const SPREAD_BOUND: f64 = std::f64::consts::PI / std::f64::consts::SQRT_2;

    fn linearize(&self, y: &Matrix3<f64>) -> Result<PolarJet> {
        check_domain(y)?;
        let mut inv_t = Vec::with_capacity(8);
        let mut q = *y;
        for _ in 0..HIGHAM_MAX_ITER {
            let w = inverse_transpose(&q)?;
            inv_t.push(w);
            let next = (q + w) * 0.5;
            let step = (next - q).norm();
            q = next;
            if step <= HIGHAM_TOL {
                // one more step at the limit so the derivative iterates settle
                inv_t.push(inverse_transpose(&q)?);
                return Ok(PolarJet { value: q, inv_t });
            }
        }
        Err(Error::OutsideProjectionDomain(format!(
            "polar iteration did not converge in {HIGHAM_MAX_ITER} steps"
        )))
    }

    fn project(&self, q: &Matrix3<f64>) -> Result<Matrix3<f64>> {
        check_domain(q)?;
        let mut q = *q;
        for _ in 0..HIGHAM_MAX_ITER {
            let next = (q + inverse_transpose(&q)?) * 0.5;
            let step = (next - q).norm();
            q = next;
            if step <= HIGHAM_TOL {
                return Ok(q);
            }
        }
        Err(Error::OutsideProjectionDomain(format!(
            "polar iteration did not converge in {HIGHAM_MAX_ITER} steps"
        )))
    }

    fn membership_residual(&self, p: &Matrix3<f64>) -> f64 {
        if p.determinant() <= 0.0 {
            return f64::INFINITY;
        }
        orthogonality_residual(p)
    }

    fn tangent_project(&self, p: &Matrix3<f64>, v: &Matrix3<f64>) -> Matrix3<f64> {
        p * skew(&(p.transpose() * v))
    }

    fn distance(&self, p: &Matrix3<f64>, q: &Matrix3<f64>) -> f64 {
        std::f64::consts::SQRT_2 * rotation_angle(&(p.transpose() * q))
    }

    fn exp(&self, p: &Matrix3<f64>, v: &Matrix3<f64>) -> Matrix3<f64> {
        p * exp_skew(&skew(&(p.transpose() * v)))
    }

    fn log(&self, p: &Matrix3<f64>, q: &Matrix3<f64>) -> Result<Matrix3<f64>> {
        Ok(p * log_rotation(&(p.transpose() * q))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::testing::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const G: SpecialOrthogonal = SpecialOrthogonal;

    fn rot_z(t: f64) -> Matrix3<f64> {
        Matrix3::new(t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0)
    }

    /// Polar factor `U V^T` from the singular value decomposition.
    fn svd_polar(a: &Matrix3<f64>) -> Matrix3<f64> {
        let svd = a.svd(true, true);
        svd.u.unwrap() * svd.v_t.unwrap()
    }

    /// Random matrix with positive determinant near a random rotation.
    fn random_near_rotation(rng: &mut impl Rng, spread: f64) -> Matrix3<f64> {
        loop {
            let a = random_rotation(rng) + random_matrix(rng, spread);
            if a.determinant() > 0.1 {
                return a;
            }
        }
    }

    #[test]
    fn projection_examples() {
        assert_relative_eq!(G.project(&(Matrix3::identity() * 2.0)).unwrap(), Matrix3::identity(), epsilon = 1e-15);
        let a = Matrix3::new(0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 3.0);
        let expected = svd_polar(&a);
        assert_relative_eq!(expected, Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(G.project(&a).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn non_positive_determinant_is_rejected() {
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(G.project(&reflect), Err(Error::OutsideProjectionDomain(_))));
        assert!(G.project(&Matrix3::zeros()).is_err());
        assert!(G.linearize(&reflect).is_err());
    }

    #[test]
    fn projection_matches_svd_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let a = random_near_rotation(&mut rng, 0.6);
            let p = G.project(&a).unwrap();
            assert!((p - svd_polar(&a)).norm() < 1e-12);
            assert!(orthogonality_residual(&p) < 1e-10);
            assert!(p.determinant() > 0.0);
            assert!((G.project(&p).unwrap() - p).norm() < 1e-12);
            assert!((G.linearize(&a).unwrap().value() - p).norm() == 0.0);
        }
    }

    #[test]
    fn differential_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..20 {
            let y = random_near_rotation(&mut rng, 0.5);
            let xi = random_matrix(&mut rng, 1.0);
            let fd = (G.project(&(y + xi * h)).unwrap() - G.project(&(y - xi * h)).unwrap()) / (2.0 * h);
            let d = G.project_differential(&y, &xi).unwrap();
            assert!((fd - d).norm() < 1e-6, "{}", (fd - d).norm());
        }
    }

    #[test]
    fn second_differential_matches_finite_differences_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = 1e-5;
        for _ in 0..20 {
            let y = random_near_rotation(&mut rng, 0.5);
            let a = random_matrix(&mut rng, 1.0);
            let b = random_matrix(&mut rng, 1.0);
            let c = random_matrix(&mut rng, 1.0);
            let jet = G.linearize(&y).unwrap();
            let fd = (G.project_differential(&(y + b * h), &a).unwrap()
                - G.project_differential(&(y - b * h), &a).unwrap())
                / (2.0 * h);
            let d2 = jet.second_differential(&a, &b);
            assert!((fd - d2).norm() < 1e-6 * (1.0 + d2.norm()), "{}", (fd - d2).norm());
            assert!((d2 - jet.second_differential(&b, &a)).norm() < 1e-12);
            // full symmetry of the third derivative of the squared-distance potential
            let t1 = jet.second_differential(&a, &b).dot(&c);
            let t2 = jet.second_differential(&c, &b).dot(&a);
            assert_relative_eq!(t1, t2, epsilon = 1e-11, max_relative = 1e-10);
            // self-adjoint first differential
            assert_relative_eq!(jet.differential(&a).dot(&c), a.dot(&jet.differential(&c)), epsilon = 1e-12);
        }
    }

    #[test]
    fn quadratic_convergence_of_polar_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut worst: f64 = 0.0;
        let mut trials = 0;
        while trials < 50 {
            let a = random_near_rotation(&mut rng, 0.3);
            let limit = svd_polar(&a);
            if (a - limit).norm() > 0.5 {
                continue;
            }
            trials += 1;
            let iterates = G.polar_iterates(&a).unwrap();
            let errs: Vec<f64> = iterates.iter().map(|q| (q - limit).norm()).collect();
            for w in errs.windows(2) {
                if w[0] > 1e-7 {
                    worst = worst.max(w[1] / (w[0] * w[0]));
                }
            }
        }
        assert!(worst < 2.0, "fitted constant {worst}");
    }

    #[test]
    fn tangent_projector_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let v = random_matrix(&mut rng, 1.0);
        assert_relative_eq!(G.tangent_project(&Matrix3::identity(), &v), (v - v.transpose()) * 0.5);
        for _ in 0..100 {
            let p = random_rotation(&mut rng);
            let m = G.tangent_projector(&p).unwrap();
            assert!((&m * &m - &m).abs().max() < 1e-12);
            assert!((&m - m.transpose()).abs().max() < 1e-12);
            // range is three-dimensional
            assert_relative_eq!(m.trace(), 3.0, epsilon = 1e-12);
            let t = G.tangent_project(&p, &random_matrix(&mut rng, 1.0));
            let s = p.transpose() * t;
            assert!((s + s.transpose()).norm() < 1e-10);
        }
        assert!(G.tangent_projector(&(Matrix3::identity() * 1.01)).is_err());
    }

    #[test]
    fn differential_on_manifold_is_orthogonal_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let p = random_rotation(&mut rng);
            let xi = random_matrix(&mut rng, 2.0);
            let d = G.project_differential(&p, &xi).unwrap();
            assert!((d - G.tangent_project(&p, &xi)).norm() < 1e-10);
            let omega = G.tangent_project(&p, &random_matrix(&mut rng, 1.0));
            assert!((d - xi).dot(&omega).abs() < 1e-10);
        }
    }

    #[test]
    fn distance_to_z_rotation() {
        let theta = 0.7;
        // oracle: Frobenius norm of the skew generator theta * [e_z]_x
        let generator = Vector3::new(0.0, 0.0, theta).cross_matrix();
        assert_relative_eq!(generator.norm(), 2f64.sqrt() * theta, epsilon = 1e-15);
        assert_relative_eq!(G.distance(&Matrix3::identity(), &rot_z(theta)), generator.norm(), epsilon = 1e-14);
        let r = rot_z(0.3);
        assert_eq!(G.distance(&r, &r), 0.0);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let p = random_rotation(&mut rng);
        assert!((G.exp(&p, &Matrix3::zeros()) - p).norm() < 1e-15);
        let mut count = 0;
        while count < 100 {
            let p = random_rotation(&mut rng);
            let q = random_rotation(&mut rng);
            if G.distance(&p, &q) >= 2.0 {
                continue;
            }
            count += 1;
            let v = G.log(&p, &q).unwrap();
            assert_relative_eq!(v.norm(), G.distance(&p, &q), epsilon = 1e-12);
            assert!((G.exp(&p, &v) - q).norm() < 1e-10);
        }
        let half_turn = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
        assert!(matches!(G.log(&Matrix3::identity(), &half_turn), Err(Error::CutLocus(_))));
    }

    #[test]
    fn left_multiplication_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let r = random_rotation(&mut rng);
            let a = random_near_rotation(&mut rng, 0.5);
            assert!((G.project(&(r * a)).unwrap() - r * G.project(&a).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_matrix_validation() {
        assert!(RotationMatrix::new(rot_z(0.2)).is_ok());
        assert!(RotationMatrix::new(-Matrix3::identity()).is_err());
        assert!(RotationMatrix::new(Matrix3::identity() * 1.001).is_err());
    }
}
