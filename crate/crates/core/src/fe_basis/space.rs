use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use super::quadrature::{cached_rule, MAX_QUADRATURE_DEGREE};
use super::shape::{reference_basis, NodeEntity, ReferenceBasis};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(usize),
    Edge(usize, usize, usize),
    Interior(usize, usize),
}

/// Conforming Lagrange space of order 1 to 3 over a mesh.
#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    mesh: Arc<Mesh>,
    order: usize,
    nodes: Vec<Point2>,
    dof_offsets: Vec<usize>,
    dofs: Vec<usize>,
    boundary: Vec<bool>,
}

impl LagrangeSpace {
    pub fn new(mesh: Arc<Mesh>, order: usize) -> Result<Self> {
        reference_basis(crate::mesh::ElementKind::Triangle, order)?;
        let mut index: HashMap<NodeKey, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut dof_offsets = Vec::with_capacity(mesh.elements().len() + 1);
        let mut dofs = Vec::new();
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        dof_offsets.push(0);

        for (e, el) in mesh.elements().iter().enumerate() {
            let basis = reference_basis(el.kind, order)?;
            let ids = el.corner_ids();
            for &(a, b) in el.kind.edges() {
                *edge_count.entry((ids[a].min(ids[b]), ids[a].max(ids[b]))).or_default() += 1;
            }
            for node in basis.nodes() {
                let key = match node.entity {
                    NodeEntity::Vertex(k) => NodeKey::Vertex(ids[k]),
                    NodeEntity::Edge { edge, position } => {
                        let (a, b) = el.kind.edges()[edge];
                        let (ga, gb) = (ids[a], ids[b]);
                        if ga < gb {
                            NodeKey::Edge(ga, gb, position)
                        } else {
                            NodeKey::Edge(gb, ga, order - position)
                        }
                    }
                    NodeEntity::Interior(k) => NodeKey::Interior(e, k),
                };
                let gid = *index.entry(key).or_insert_with(|| {
                    nodes.push(mesh.map_unchecked(e, node.reference));
                    nodes.len() - 1
                });
                dofs.push(gid);
            }
            dof_offsets.push(dofs.len());
        }

        let mut boundary = vec![false; nodes.len()];
        for (e, el) in mesh.elements().iter().enumerate() {
            let basis = reference_basis(el.kind, order)?;
            let ids = el.corner_ids();
            let local = &dofs[dof_offsets[e]..dof_offsets[e + 1]];
            let on_boundary_edge = |edge: usize| {
                let (a, b) = el.kind.edges()[edge];
                edge_count[&(ids[a].min(ids[b]), ids[a].max(ids[b]))] == 1
            };
            for (node, &gid) in basis.nodes().iter().zip(local) {
                let flag = match node.entity {
                    NodeEntity::Vertex(k) => {
                        let n = el.kind.corner_count();
                        // edges k-1 -> k and k -> k+1
                        on_boundary_edge(k) || on_boundary_edge((k + n - 1) % n)
                    }
                    NodeEntity::Edge { edge, .. } => on_boundary_edge(edge),
                    NodeEntity::Interior(_) => false,
                };
                boundary[gid] |= flag;
            }
        }

        Ok(LagrangeSpace {
            mesh,
            order,
            nodes,
            dof_offsets,
            dofs,
            boundary,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Lagrange points in world coordinates.
    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn element_count(&self) -> usize {
        self.dof_offsets.len() - 1
    }

    /// Global node indices of element `e`, in local node order.
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.dofs[self.dof_offsets[e]..self.dof_offsets[e + 1]]
    }

    pub fn basis(&self, e: usize) -> &'static ReferenceBasis {
        reference_basis(self.mesh.element(e).kind, self.order).expect("order validated")
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.boundary[i]).collect()
    }

    /// Fills `buf` with shape values, world gradients and geometry at a
    /// reference point of element `e`. The point is not range-checked.
    pub fn evaluate_at(&self, e: usize, ref_pt: Point2, buf: &mut PointEval) {
        let basis = self.basis(e);
        let n = basis.len();
        buf.values.resize(n, 0.0);
        buf.ref_gradients.resize(n, Vector2::zeros());
        buf.gradients.resize(n, Vector2::zeros());
        basis.evaluate_into(ref_pt, &mut buf.values, &mut buf.ref_gradients);
        let jac = self.mesh.jacobian_unchecked(e, ref_pt);
        buf.det = jac.determinant();
        buf.inverse_jacobian = jac.try_inverse().expect("positive Jacobian");
        // world gradient = J^{-T} reference gradient
        let inv_t = buf.inverse_jacobian.transpose();
        for (g, rg) in buf.gradients.iter_mut().zip(&buf.ref_gradients) {
            *g = inv_t * rg;
        }
        buf.x = self.mesh.map_unchecked(e, ref_pt);
        buf.ref_point = ref_pt;
    }
}

impl LagrangeSpace {
    /// Calls `f(point_data, weight)` for every quadrature point of element
    /// `e`, where `weight` already includes `|det J|`.
    pub fn integrate_element<F>(&self, e: usize, degree: usize, buf: &mut PointEval, mut f: F) -> Result<()>
    where
        F: FnMut(&PointEval, f64) -> Result<()>,
    {
        if degree > MAX_QUADRATURE_DEGREE {
            return Err(Error::UnsupportedQuadratureDegree(degree));
        }
        let rule = cached_rule(self.mesh.element(e).kind, degree);
        for (p, w) in rule.iter() {
            self.evaluate_at(e, p, buf);
            buf.ref_point = p;
            f(buf, w * buf.det.abs())?;
        }
        Ok(())
    }
}

/// Scratch data for evaluating a space at one point.
#[derive(Debug, Clone, Default)]
pub struct PointEval {
    pub values: Vec<f64>,
    pub ref_gradients: Vec<Vector2<f64>>,
    /// World-coordinate gradients.
    pub gradients: Vec<Vector2<f64>>,
    pub det: f64,
    pub inverse_jacobian: Matrix2<f64>,
    pub x: Point2,
    /// Reference coordinates of the current quadrature point.
    pub ref_point: Point2,
}
