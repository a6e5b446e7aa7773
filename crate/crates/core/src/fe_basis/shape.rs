//! Lagrange shape functions of order 1 to 3 on the reference elements.
//!
//! Local nodes are ordered vertices first, then edge nodes (edge by edge, in
//! the direction of the local edge), then interior nodes. Nodes are
//! equidistant.

use std::sync::OnceLock;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::mesh::{ElementKind, Point2};

pub const MAX_ORDER: usize = 3;

/// Mesh entity a local node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeEntity {
    Vertex(usize),
    /// Local edge index and position `1..order` counted from the edge's first corner.
    Edge { edge: usize, position: usize },
    Interior(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalNode {
    pub reference: Point2,
    pub entity: NodeEntity,
}

/// Nodal basis of one reference element, evaluated in product form:
/// tensor products of 1D Lagrange polynomials on the square and the
/// barycentric product formula on the triangle.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    pub kind: ElementKind,
    pub order: usize,
    nodes: Vec<LocalNode>,
    /// Per node: lattice indices `(i, j)` on the square or barycentric
    /// indices `(a0, a1, a2)` on the triangle.
    indices: Vec<[usize; 3]>,
}

/// `prod_{s < a} (r t - s) / (s + 1)` and its derivative in `t`.
fn barycentric_factor(r: f64, a: usize, t: f64) -> (f64, f64) {
    let mut val = 1.0;
    let mut der = 0.0;
    for s in 0..a {
        let c = 1.0 / (s as f64 + 1.0);
        let f = (r * t - s as f64) * c;
        der = der * f + val * r * c;
        val *= f;
    }
    (val, der)
}

/// 1D Lagrange polynomial on the nodes `k / r` that is one at `i / r`.
fn lagrange_1d(r: usize, i: usize, t: f64) -> (f64, f64) {
    let rf = r as f64;
    let xi = i as f64 / rf;
    let mut val = 1.0;
    let mut der = 0.0;
    for k in (0..=r).filter(|&k| k != i) {
        let xk = k as f64 / rf;
        let c = 1.0 / (xi - xk);
        let f = (t - xk) * c;
        der = der * f + val * c;
        val *= f;
    }
    (val, der)
}

impl ReferenceBasis {
    fn new(kind: ElementKind, order: usize) -> Self {
        let nodes = local_nodes(kind, order);
        let r = order as f64;
        let indices = nodes
            .iter()
            .map(|n| {
                let i = (n.reference.x * r).round() as usize;
                let j = (n.reference.y * r).round() as usize;
                match kind {
                    ElementKind::Triangle => [order - i - j, i, j],
                    ElementKind::Quadrilateral => [i, j, 0],
                }
            })
            .collect();
        ReferenceBasis {
            kind,
            order,
            nodes,
            indices,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[LocalNode] {
        &self.nodes
    }

    fn value_and_gradient(&self, node: usize, p: Point2) -> (f64, Vector2<f64>) {
        let idx = self.indices[node];
        match self.kind {
            ElementKind::Triangle => {
                let r = self.order as f64;
                let (v0, d0) = barycentric_factor(r, idx[0], 1.0 - p.x - p.y);
                let (v1, d1) = barycentric_factor(r, idx[1], p.x);
                let (v2, d2) = barycentric_factor(r, idx[2], p.y);
                (
                    v0 * v1 * v2,
                    Vector2::new(v0 * d1 * v2 - d0 * v1 * v2, v0 * v1 * d2 - d0 * v1 * v2),
                )
            }
            ElementKind::Quadrilateral => {
                let (vx, dx) = lagrange_1d(self.order, idx[0], p.x);
                let (vy, dy) = lagrange_1d(self.order, idx[1], p.y);
                (vx * vy, Vector2::new(dx * vy, vx * dy))
            }
        }
    }

    /// Writes `phi_i(p)` into `out`, which must have length `self.len()`.
    pub fn values_into(&self, p: Point2, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.value_and_gradient(i, p).0;
        }
    }

    /// Values and reference gradients in one pass.
    pub fn evaluate_into(&self, p: Point2, values: &mut [f64], gradients: &mut [Vector2<f64>]) {
        for (i, (v, g)) in values.iter_mut().zip(gradients.iter_mut()).enumerate() {
            (*v, *g) = self.value_and_gradient(i, p);
        }
    }

    /// Writes reference gradients of all basis functions into `out`.
    pub fn gradients_into(&self, p: Point2, out: &mut [Vector2<f64>]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.value_and_gradient(i, p).1;
        }
    }
}

fn local_nodes(kind: ElementKind, order: usize) -> Vec<LocalNode> {
    let r = order as f64;
    let corners = kind.reference_corners();
    let mut nodes: Vec<LocalNode> = corners
        .iter()
        .enumerate()
        .map(|(k, c)| LocalNode {
            reference: Point2::new(c[0], c[1]),
            entity: NodeEntity::Vertex(k),
        })
        .collect();
    for (edge, &(a, b)) in kind.edges().iter().enumerate() {
        let (pa, pb) = (Point2::from(corners[a]), Point2::from(corners[b]));
        for position in 1..order {
            let t = position as f64 / r;
            nodes.push(LocalNode {
                reference: pa + (pb - pa) * t,
                entity: NodeEntity::Edge { edge, position },
            });
        }
    }
    let mut interior = Vec::new();
    match kind {
        ElementKind::Triangle => {
            for j in 1..order {
                for i in 1..order {
                    if i + j < order {
                        interior.push(Point2::new(i as f64 / r, j as f64 / r));
                    }
                }
            }
        }
        ElementKind::Quadrilateral => {
            for j in 1..order {
                for i in 1..order {
                    interior.push(Point2::new(i as f64 / r, j as f64 / r));
                }
            }
        }
    }
    nodes.extend(interior.into_iter().enumerate().map(|(k, p)| LocalNode {
        reference: p,
        entity: NodeEntity::Interior(k),
    }));
    nodes
}

/// Shared basis tables, built once per `(kind, order)`.
pub fn reference_basis(kind: ElementKind, order: usize) -> Result<&'static ReferenceBasis> {
    static TABLE: OnceLock<Vec<ReferenceBasis>> = OnceLock::new();
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let table = TABLE.get_or_init(|| {
        (1..=MAX_ORDER)
            .flat_map(|r| {
                [
                    ReferenceBasis::new(ElementKind::Triangle, r),
                    ReferenceBasis::new(ElementKind::Quadrilateral, r),
                ]
            })
            .collect()
    });
    let idx = 2 * (order - 1)
        + match kind {
            ElementKind::Triangle => 0,
            ElementKind::Quadrilateral => 1,
        };
    Ok(&table[idx])
}

/// Values of all shape functions of order `order` at `ref_pt`.
pub fn shape_values(kind: ElementKind, order: usize, ref_pt: Point2) -> Result<Vec<f64>> {
    let basis = reference_basis(kind, order)?;
    if !kind.contains_reference_point(ref_pt) {
        return Err(Error::OutsideReferenceElement(ref_pt.x, ref_pt.y));
    }
    let mut out = vec![0.0; basis.len()];
    basis.values_into(ref_pt, &mut out);
    Ok(out)
}

/// Reference-coordinate gradients of all shape functions at `ref_pt`.
pub fn shape_gradients(kind: ElementKind, order: usize, ref_pt: Point2) -> Result<Vec<Vector2<f64>>> {
    let basis = reference_basis(kind, order)?;
    if !kind.contains_reference_point(ref_pt) {
        return Err(Error::OutsideReferenceElement(ref_pt.x, ref_pt.y));
    }
    let mut out = vec![Vector2::zeros(); basis.len()];
    basis.gradients_into(ref_pt, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KINDS: [ElementKind; 2] = [ElementKind::Triangle, ElementKind::Quadrilateral];

    fn random_ref_point(kind: ElementKind, rng: &mut impl Rng) -> Point2 {
        loop {
            let p = Point2::new(rng.gen(), rng.gen());
            if kind.contains_reference_point(p) {
                return p;
            }
        }
    }

    #[test]
    fn node_counts() {
        let expected = [(ElementKind::Triangle, [3, 6, 10]), (ElementKind::Quadrilateral, [4, 9, 16])];
        for (kind, counts) in expected {
            for r in 1..=3 {
                assert_eq!(reference_basis(kind, r).unwrap().len(), counts[r - 1]);
            }
        }
    }

    #[test]
    fn linear_triangle_barycenter() {
        let v = shape_values(ElementKind::Triangle, 1, Point2::new(1.0 / 3.0, 1.0 / 3.0)).unwrap();
        for x in v {
            assert_relative_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn linear_triangle_gradients() {
        let g = shape_gradients(ElementKind::Triangle, 1, Point2::new(0.1, 0.7)).unwrap();
        let expected = [Vector2::new(-1.0, -1.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)];
        for (a, b) in g.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn kronecker_property() {
        for kind in KINDS {
            for r in 1..=3 {
                let basis = reference_basis(kind, r).unwrap();
                for (j, node) in basis.nodes().iter().enumerate() {
                    let v = shape_values(kind, r, node.reference).unwrap();
                    for (i, x) in v.iter().enumerate() {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        assert!((x - delta).abs() < 1e-13, "{kind:?} r={r} i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_gradient_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in KINDS {
            for r in 1..=3 {
                for _ in 0..20 {
                    let p = random_ref_point(kind, &mut rng);
                    let s: f64 = shape_values(kind, r, p).unwrap().iter().sum();
                    assert!((s - 1.0).abs() < 1e-13);
                    let g: Vector2<f64> = shape_gradients(kind, r, p).unwrap().iter().sum();
                    assert!(g.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-6;
        for kind in KINDS {
            for r in 1..=3 {
                let basis = reference_basis(kind, r).unwrap();
                for _ in 0..10 {
                    let p = random_ref_point(kind, &mut rng);
                    let g = shape_gradients(kind, r, p).unwrap();
                    let n = basis.len();
                    let (mut vp, mut vm) = (vec![0.0; n], vec![0.0; n]);
                    for axis in 0..2 {
                        let mut e = Point2::zeros();
                        e[axis] = h;
                        basis.values_into(p + e, &mut vp);
                        basis.values_into(p - e, &mut vm);
                        for i in 0..n {
                            let fd = (vp[i] - vm[i]) / (2.0 * h);
                            assert!((fd - g[i][axis]).abs() < 1e-8, "{kind:?} r={r} err={:e} g={}", (fd - g[i][axis]).abs(), g[i][axis]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn quadratic_quad_node_is_unit_vector() {
        let basis = reference_basis(ElementKind::Quadrilateral, 2).unwrap();
        let node = basis.nodes()[5];
        let v = shape_values(ElementKind::Quadrilateral, 2, node.reference).unwrap();
        for (i, x) in v.iter().enumerate() {
            assert!((x - if i == 5 { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            shape_values(ElementKind::Triangle, 4, Point2::new(0.1, 0.1)),
            Err(Error::UnsupportedOrder(4))
        );
        assert!(shape_values(ElementKind::Triangle, 0, Point2::new(0.1, 0.1)).is_err());
        assert!(shape_gradients(ElementKind::Quadrilateral, 2, Point2::new(1.2, 0.1)).is_err());
    }
}
