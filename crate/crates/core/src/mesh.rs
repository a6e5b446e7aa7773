//! Mixed triangle/quadrilateral meshes of a planar domain with uniform
//! refinement and refinement lineage.
//!
//! Reference elements are the unit triangle `{x >= 0, y >= 0, x + y <= 1}`
//! with corners `(0,0), (1,0), (0,1)` and the unit square `[0,1]^2` with
//! corners `(0,0), (1,0), (1,1), (0,1)`. Triangles map affinely, quads
//! bilinearly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Point2 = Vector2<f64>;

/// Tolerance for accepting reference coordinates on the element boundary.
const REF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Triangle,
    Quadrilateral,
}

impl ElementKind {
    pub fn corner_count(self) -> usize {
        match self {
            ElementKind::Triangle => 3,
            ElementKind::Quadrilateral => 4,
        }
    }

    /// Area of the reference element.
    pub fn reference_measure(self) -> f64 {
        match self {
            ElementKind::Triangle => 0.5,
            ElementKind::Quadrilateral => 1.0,
        }
    }

    /// Corners of the reference element, counterclockwise.
    pub fn reference_corners(self) -> &'static [[f64; 2]] {
        match self {
            ElementKind::Triangle => &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            ElementKind::Quadrilateral => &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    /// Local edges as pairs of local corner indices.
    pub fn edges(self) -> &'static [(usize, usize)] {
        match self {
            ElementKind::Triangle => &[(0, 1), (1, 2), (2, 0)],
            ElementKind::Quadrilateral => &[(0, 1), (1, 2), (2, 3), (3, 0)],
        }
    }

    pub fn contains_reference_point(self, p: Point2) -> bool {
        match self {
            ElementKind::Triangle => {
                p.x >= -REF_TOL && p.y >= -REF_TOL && p.x + p.y <= 1.0 + REF_TOL
            }
            ElementKind::Quadrilateral => {
                (-REF_TOL..=1.0 + REF_TOL).contains(&p.x)
                    && (-REF_TOL..=1.0 + REF_TOL).contains(&p.y)
            }
        }
    }

    /// Reference-element centroid.
    pub fn reference_center(self) -> Point2 {
        match self {
            ElementKind::Triangle => Point2::new(1.0 / 3.0, 1.0 / 3.0),
            ElementKind::Quadrilateral => Point2::new(0.5, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub kind: ElementKind,
    corners: [usize; 4],
}

impl Element {
    pub fn triangle(id: usize, corners: [usize; 3]) -> Self {
        Element {
            id,
            kind: ElementKind::Triangle,
            corners: [corners[0], corners[1], corners[2], usize::MAX],
        }
    }

    pub fn quadrilateral(id: usize, corners: [usize; 4]) -> Self {
        Element {
            id,
            kind: ElementKind::Quadrilateral,
            corners,
        }
    }

    pub fn corner_ids(&self) -> &[usize] {
        &self.corners[..self.kind.corner_count()]
    }
}

/// Affine embedding of a child element's reference coordinates into the
/// reference coordinates of its parent: `parent_ref = origin + axes * child_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChildEmbedding {
    pub parent_element: usize,
    pub origin: Point2,
    pub axes: Matrix2<f64>,
}

impl ChildEmbedding {
    pub fn map(&self, child_ref: Point2) -> Point2 {
        self.origin + self.axes * child_ref
    }
}

#[derive(Debug, Clone)]
struct Lineage {
    parent: Arc<Mesh>,
    embeddings: Vec<ChildEmbedding>,
}

/// An immutable conforming planar mesh.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    elements: Vec<Element>,
    level: usize,
    lineage: Option<Lineage>,
}

impl Mesh {
    /// Builds a level-0 mesh from raw data. Elements must be counterclockwise.
    pub fn from_parts(vertices: Vec<Point2>, elements: Vec<Element>) -> Result<Self> {
        for e in &elements {
            for &c in e.corner_ids() {
                if c >= vertices.len() {
                    return Err(Error::InvalidConfig(format!(
                        "element {} references vertex {c} of {}",
                        e.id,
                        vertices.len()
                    )));
                }
            }
            let ids = e.corner_ids();
            for (i, a) in ids.iter().enumerate() {
                if ids[i + 1..].contains(a) {
                    return Err(Error::InvalidConfig(format!(
                        "element {} has repeated corner {a}",
                        e.id
                    )));
                }
            }
        }
        Ok(Mesh {
            vertices,
            elements,
            level: 0,
            lineage: None,
        })
    }

    /// The coarse grid on `[-5, 5]^2`: a 4x4 block of cells, quads on cells
    /// with even `i + j`, the remaining cells split into two triangles along
    /// the lower-left to upper-right diagonal. Interior vertices are shifted
    /// by `(0.3, -0.3) * (-1)^(i+j)` so that the quads are not parallelograms.
    pub fn build_coarse_grid() -> Self {
        const N: usize = 4;
        const SHIFT: f64 = 0.3;
        let step = 10.0 / N as f64;
        let vid = |i: usize, j: usize| j * (N + 1) + i;

        let mut vertices = Vec::with_capacity((N + 1) * (N + 1));
        for j in 0..=N {
            for i in 0..=N {
                let mut p = Point2::new(-5.0 + step * i as f64, -5.0 + step * j as f64);
                if (1..N).contains(&i) && (1..N).contains(&j) {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    p += Point2::new(SHIFT, -SHIFT) * sign;
                }
                vertices.push(p);
            }
        }

        let mut elements = Vec::new();
        for cj in 0..N {
            for ci in 0..N {
                let (v00, v10, v11, v01) = (
                    vid(ci, cj),
                    vid(ci + 1, cj),
                    vid(ci + 1, cj + 1),
                    vid(ci, cj + 1),
                );
                if (ci + cj) % 2 == 0 {
                    elements.push(Element::quadrilateral(elements.len(), [v00, v10, v11, v01]));
                } else {
                    elements.push(Element::triangle(elements.len(), [v00, v10, v11]));
                    elements.push(Element::triangle(elements.len(), [v00, v11, v01]));
                }
            }
        }

        Mesh {
            vertices,
            elements,
            level: 0,
            lineage: None,
        }
    }

    /// Splits every element into four by connecting edge midpoints (and, for
    /// quads, the image of the reference centre).
    pub fn refine_uniform(self: &Arc<Self>) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut elements = Vec::with_capacity(4 * self.elements.len());
        let mut embeddings = Vec::with_capacity(4 * self.elements.len());

        for (ei, e) in self.elements.iter().enumerate() {
            let ids = e.corner_ids();
            let refc = e.kind.reference_corners();
            let mut mids = [0usize; 4];
            for (k, &(a, b)) in e.kind.edges().iter().enumerate() {
                let key = (ids[a].min(ids[b]), ids[a].max(ids[b]));
                mids[k] = *edge_mid.entry(key).or_insert_with(|| {
                    let r = Point2::new(
                        0.5 * (refc[a][0] + refc[b][0]),
                        0.5 * (refc[a][1] + refc[b][1]),
                    );
                    vertices.push(self.map_unchecked(ei, r));
                    vertices.len() - 1
                });
            }

            let half = Matrix2::identity() * 0.5;
            match e.kind {
                ElementKind::Triangle => {
                    let [c0, c1, c2] = [ids[0], ids[1], ids[2]];
                    let [m01, m12, m20] = [mids[0], mids[1], mids[2]];
                    let children = [
                        ([c0, m01, m20], Point2::new(0.0, 0.0), half),
                        ([m01, c1, m12], Point2::new(0.5, 0.0), half),
                        ([m20, m12, c2], Point2::new(0.0, 0.5), half),
                        (
                            [m01, m12, m20],
                            Point2::new(0.5, 0.0),
                            Matrix2::new(0.0, -0.5, 0.5, 0.5),
                        ),
                    ];
                    for (corners, origin, axes) in children {
                        elements.push(Element::triangle(elements.len(), corners));
                        embeddings.push(ChildEmbedding {
                            parent_element: ei,
                            origin,
                            axes,
                        });
                    }
                }
                ElementKind::Quadrilateral => {
                    vertices.push(self.map_unchecked(ei, Point2::new(0.5, 0.5)));
                    let center = vertices.len() - 1;
                    let [c0, c1, c2, c3] = [ids[0], ids[1], ids[2], ids[3]];
                    let [m01, m12, m23, m30] = mids;
                    let children = [
                        ([c0, m01, center, m30], Point2::new(0.0, 0.0)),
                        ([m01, c1, m12, center], Point2::new(0.5, 0.0)),
                        ([center, m12, c2, m23], Point2::new(0.5, 0.5)),
                        ([m30, center, m23, c3], Point2::new(0.0, 0.5)),
                    ];
                    for (corners, origin) in children {
                        elements.push(Element::quadrilateral(elements.len(), corners));
                        embeddings.push(ChildEmbedding {
                            parent_element: ei,
                            origin,
                            axes: half,
                        });
                    }
                }
            }
        }

        Mesh {
            vertices,
            elements,
            level: self.level + 1,
            lineage: Some(Lineage {
                parent: Arc::clone(self),
                embeddings,
            }),
        }
    }

    /// Coarse grid followed by `levels` uniform refinements; entry `k` is level `k`.
    pub fn hierarchy(levels: usize) -> Vec<Arc<Mesh>> {
        let mut out = vec![Arc::new(Mesh::build_coarse_grid())];
        for _ in 0..levels {
            let next = out.last().unwrap().refine_uniform();
            out.push(Arc::new(next));
        }
        out
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent(&self) -> Option<&Arc<Mesh>> {
        self.lineage.as_ref().map(|l| &l.parent)
    }

    pub fn child_embedding(&self, e: usize) -> Option<&ChildEmbedding> {
        self.lineage.as_ref().map(|l| &l.embeddings[e])
    }

    /// Iso-parametric map from reference to world coordinates.
    pub fn geometry_map(&self, e: usize, ref_pt: Point2) -> Result<Point2> {
        self.check_ref(e, ref_pt)?;
        Ok(self.map_unchecked(e, ref_pt))
    }

    /// Derivative of [`Mesh::geometry_map`] with respect to the reference
    /// coordinates; columns are `dx/dxi` and `dx/deta`.
    pub fn jacobian(&self, e: usize, ref_pt: Point2) -> Result<Matrix2<f64>> {
        self.check_ref(e, ref_pt)?;
        Ok(self.jacobian_unchecked(e, ref_pt))
    }

    fn check_ref(&self, e: usize, p: Point2) -> Result<()> {
        if self.elements[e].kind.contains_reference_point(p) {
            Ok(())
        } else {
            Err(Error::OutsideReferenceElement(p.x, p.y))
        }
    }

    pub(crate) fn map_unchecked(&self, e: usize, p: Point2) -> Point2 {
        let el = &self.elements[e];
        let v = |k: usize| self.vertices[el.corners[k]];
        match el.kind {
            ElementKind::Triangle => v(0) + (v(1) - v(0)) * p.x + (v(2) - v(0)) * p.y,
            ElementKind::Quadrilateral => {
                let (x, y) = (p.x, p.y);
                v(0) * ((1.0 - x) * (1.0 - y))
                    + v(1) * (x * (1.0 - y))
                    + v(2) * (x * y)
                    + v(3) * ((1.0 - x) * y)
            }
        }
    }

    pub(crate) fn jacobian_unchecked(&self, e: usize, p: Point2) -> Matrix2<f64> {
        let el = &self.elements[e];
        let v = |k: usize| self.vertices[el.corners[k]];
        let (dx, dy) = match el.kind {
            ElementKind::Triangle => (v(1) - v(0), v(2) - v(0)),
            ElementKind::Quadrilateral => {
                let (x, y) = (p.x, p.y);
                (
                    (v(1) - v(0)) * (1.0 - y) + (v(2) - v(3)) * y,
                    (v(3) - v(0)) * (1.0 - x) + (v(2) - v(1)) * x,
                )
            }
        };
        Matrix2::from_columns(&[dx, dy])
    }

    /// Longest edge or diagonal of element `e`.
    pub fn element_diameter(&self, e: usize) -> f64 {
        let ids = self.elements[e].corner_ids();
        let mut d: f64 = 0.0;
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                d = d.max((self.vertices[a] - self.vertices[b]).norm());
            }
        }
        d
    }

    /// Maximum element diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.elements.len())
            .map(|e| self.element_diameter(e))
            .fold(0.0, f64::max)
    }

    /// Ratio of largest to smallest element diameter.
    pub fn quasi_uniformity(&self) -> f64 {
        let (lo, hi) = (0..self.elements.len())
            .map(|e| self.element_diameter(e))
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        hi / lo
    }

    /// Whether `ancestor` is this mesh or one of its (transitive) parents.
    pub fn descends_from(&self, ancestor: &Mesh) -> bool {
        let mut cur: &Mesh = self;
        loop {
            if std::ptr::eq(cur, ancestor) {
                return true;
            }
            match cur.parent() {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Maps `(e, ref_pt)` on this mesh to the containing element and reference
    /// coordinates on `ancestor`.
    pub fn locate_in_ancestor(
        &self,
        ancestor: &Mesh,
        e: usize,
        ref_pt: Point2,
    ) -> Result<(usize, Point2)> {
        let mut cur: &Mesh = self;
        let (mut e, mut p) = (e, ref_pt);
        loop {
            if std::ptr::eq(cur, ancestor) {
                return Ok((e, p));
            }
            let lineage = cur.lineage.as_ref().ok_or(Error::NotInLineage)?;
            let emb = &lineage.embeddings[e];
            p = emb.map(p);
            e = emb.parent_element;
            cur = &lineage.parent;
        }
    }

    /// Plain-text dump: one `v x y` line per vertex followed by `t i j k` or
    /// `q i j k l` per element.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {}", v.x, v.y);
        }
        for e in &self.elements {
            let tag = match e.kind {
                ElementKind::Triangle => 't',
                ElementKind::Quadrilateral => 'q',
            };
            let _ = write!(s, "{tag}");
            for c in e.corner_ids() {
                let _ = write!(s, " {c}");
            }
            s.push('\n');
        }
        s
    }

    /// Parses the format written by [`Mesh::to_text`]. The result has no lineage.
    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut vertices = Vec::new();
        let mut elements = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or_default();
            let bad = || Error::Parse(format!("mesh line {}: `{line}`", lineno + 1));
            match tag {
                "v" => {
                    let xs: Vec<f64> = it
                        .map(|t| t.parse::<f64>().map_err(|_| bad()))
                        .collect::<Result<_>>()?;
                    if xs.len() != 2 {
                        return Err(bad());
                    }
                    vertices.push(Point2::new(xs[0], xs[1]));
                }
                "t" | "q" => {
                    let ids: Vec<usize> = it
                        .map(|t| t.parse::<usize>().map_err(|_| bad()))
                        .collect::<Result<_>>()?;
                    match (tag, ids.as_slice()) {
                        ("t", &[a, b, c]) => elements.push(Element::triangle(elements.len(), [a, b, c])),
                        ("q", &[a, b, c, d]) => {
                            elements.push(Element::quadrilateral(elements.len(), [a, b, c, d]))
                        }
                        _ => return Err(bad()),
                    }
                }
                _ => return Err(bad()),
            }
        }
        Mesh::from_parts(vertices, elements)
    }
}
