use nalgebra::Vector3;

use super::{EmbeddedManifold, ProjectionJet};
use crate::error::{Error, Result};

/// Inputs shorter than this cannot be projected radially.
const MIN_NORM: f64 = 1e-8;

/// The unit sphere `S² ⊂ R³`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sphere;

/// A validated point of the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vector3<f64>);

impl SpherePoint {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let r = (v.norm() - 1.0).abs();
        if r <= 1e-12 {
            Ok(SpherePoint(v))
        } else {
            Err(Error::NotOnManifold(r))
        }
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SphereJet {
    unit: Vector3<f64>,
    inv_norm: f64,
}

impl ProjectionJet<Vector3<f64>> for SphereJet {
    fn value(&self) -> Vector3<f64> {
        self.unit
    }

    fn differential(&self, xi: &Vector3<f64>) -> Vector3<f64> {
        (xi - self.unit * self.unit.dot(xi)) * self.inv_norm
    }

    fn second_differential(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
        let u = &self.unit;
        let (ua, ub) = (u.dot(a), u.dot(b));
        (u * (3.0 * ua * ub - a.dot(b)) - a * ub - b * ua) * (self.inv_norm * self.inv_norm)
    }
}

impl EmbeddedManifold for Sphere {
    type Point = Vector3<f64>;
    type Jet = SphereJet;

    const NAME: &'static str = "sphere";
    const INTRINSIC_DIM: usize = 2;
    const INJECTIVITY_RADIUS: f64 = std::f64::consts::PI;
    const SPREAD_BOUND: f64 = std::f64::consts::FRAC_PI_2;

    fn linearize(&self, y: &Vector3<f64>) -> Result<SphereJet> {
        let n = y.norm();
        if !(n >= MIN_NORM) {
            return Err(Error::OutsideProjectionDomain(format!(
                "|q| = {n:e} is below {MIN_NORM:e}"
            )));
        }
        Ok(SphereJet {
            unit: y / n,
            inv_norm: 1.0 / n,
        })
    }

    fn membership_residual(&self, p: &Vector3<f64>) -> f64 {
        (p.norm() - 1.0).abs()
    }

    fn tangent_project(&self, p: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        v - p * p.dot(v)
    }

    fn distance(&self, p: &Vector3<f64>, q: &Vector3<f64>) -> f64 {
        // atan2 form is accurate for nearby and nearly antipodal points alike
        p.cross(q).norm().atan2(p.dot(q))
    }

    fn exp(&self, p: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        let t = v.norm();
        let sinc = if t < 1e-6 { 1.0 - t * t / 6.0 } else { t.sin() / t };
        let q = p * t.cos() + v * sinc;
        q / q.norm()
    }

    fn log(&self, p: &Vector3<f64>, q: &Vector3<f64>) -> Result<Vector3<f64>> {
        let w = q - p * p.dot(q);
        let s = w.norm();
        let c = p.dot(q);
        let theta = s.atan2(c);
        if theta > std::f64::consts::PI - 1e-6 {
            return Err(Error::CutLocus(format!("angle {theta} between sphere points")));
        }
        if s < 1e-300 {
            return Ok(Vector3::zeros());
        }
        Ok(w * (theta / s))
    }
}
