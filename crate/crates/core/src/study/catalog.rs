//! Analytic test maps with closed-form world gradients.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::interpolation::Differential;
use crate::manifolds::{EmbeddedManifold, SpecialOrthogonal, Sphere};
use crate::mesh::Point2;

/// A named analytic map `Ω → M` together with its derivative.
#[derive(Clone, Copy)]
pub struct TestMap<M: EmbeddedManifold> {
    pub name: &'static str,
    pub value: fn(Point2) -> M::Point,
    pub gradient: fn(Point2) -> Differential<M::Point>,
}

impl<M: EmbeddedManifold> std::fmt::Debug for TestMap<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestMap").field("name", &self.name).finish()
    }
}

/// Manifolds that the study runner knows a test map for.
pub trait StudyManifold: EmbeddedManifold {
    fn test_map() -> TestMap<Self>;
}

impl StudyManifold for Sphere {
    fn test_map() -> TestMap<Self> {
        TestMapCatalog::p_st()
    }
}

impl StudyManifold for SpecialOrthogonal {
    fn test_map() -> TestMap<Self> {
        TestMapCatalog::r_so3()
    }
}

pub struct TestMapCatalog;

impl TestMapCatalog {
    pub const NAMES: [&'static str; 2] = ["p_st", "R_so3"];

    /// Inverse stereographic projection.
    pub fn p_st() -> TestMap<Sphere> {
        TestMap {
            name: "p_st",
            value: p_st,
            gradient: p_st_gradient,
        }
    }

    /// Product of rotations about the first and second axis by `πx₀/5` and `πx₁/5`.
    pub fn r_so3() -> TestMap<SpecialOrthogonal> {
        TestMap {
            name: "R_so3",
            value: r_so3,
            gradient: r_so3_gradient,
        }
    }
}

pub fn p_st(x: Point2) -> Vector3<f64> {
    let s = x.norm_squared();
    Vector3::new(2.0 * x.x, 2.0 * x.y, s - 1.0) / (s + 1.0)
}

pub fn p_st_gradient(x: Point2) -> [Vector3<f64>; 2] {
    let s = x.norm_squared();
    let n = Vector3::new(2.0 * x.x, 2.0 * x.y, s - 1.0);
    let d = s + 1.0;
    let dn = [Vector3::new(2.0, 0.0, 2.0 * x.x), Vector3::new(0.0, 2.0, 2.0 * x.y)];
    [
        dn[0] / d - n * (2.0 * x.x / (d * d)),
        dn[1] / d - n * (2.0 * x.y / (d * d)),
    ]
}

fn rot_first(a: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (s, c) = a.sin_cos();
    (
        Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s),
    )
}

fn rot_second(b: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (s, c) = b.sin_cos();
    (
        Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c),
        Matrix3::new(-s, 0.0, -c, 0.0, 0.0, 0.0, c, 0.0, -s),
    )
}

pub fn r_so3(x: Point2) -> Matrix3<f64> {
    rot_first(PI / 5.0 * x.x).0 * rot_second(PI / 5.0 * x.y).0
}

pub fn r_so3_gradient(x: Point2) -> [Matrix3<f64>; 2] {
    let (a, da) = rot_first(PI / 5.0 * x.x);
    let (b, db) = rot_second(PI / 5.0 * x.y);
    [da * b * (PI / 5.0), a * db * (PI / 5.0)]
}
