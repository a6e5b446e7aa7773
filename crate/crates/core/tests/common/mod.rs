#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use projfe::fe_basis::LagrangeSpace;
use projfe::mesh::Mesh;

pub fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

pub fn axis_angle(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.normalize().cross_matrix();
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    axis_angle(random_unit(rng), rng.gen_range(0.0..3.0))
}

pub fn random_matrix(rng: &mut impl Rng, scale: f64) -> Matrix3<f64> {
    Matrix3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

pub fn space(level: usize, order: usize) -> Arc<LagrangeSpace> {
    let mesh = Mesh::hierarchy(level).pop().expect("hierarchy is never empty");
    Arc::new(LagrangeSpace::new(mesh, order).expect("supported order"))
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Spaces of one order on every level of a single refinement hierarchy.
pub fn nested_spaces(levels: usize, order: usize) -> Vec<Arc<LagrangeSpace>> {
    Mesh::hierarchy(levels)
        .into_iter()
        .map(|m| Arc::new(LagrangeSpace::new(m, order).expect("supported order")))
        .collect()
}
