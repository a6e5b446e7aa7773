//! Quadrature rules on the reference triangle and square.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::mesh::{ElementKind, Point2};

pub const MAX_QUADRATURE_DEGREE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point2, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // map [-1,1] -> [0,1], ascending order
        xs[n - 1 - i] = 0.5 * (x + 1.0);
        ws[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn tensor_rule(degree: usize) -> QuadratureRule {
    let n = (degree + 2) / 2;
    let (xs, ws) = gauss_legendre(n.max(1));
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (j, &y) in xs.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            points.push(Point2::new(x, y));
            weights.push(ws[i] * ws[j]);
        }
    }
    QuadratureRule {
        points,
        weights,
        degree: 2 * n - 1,
    }
}

enum Orbit {
    Centroid(f64),
    /// weight, `a` with barycentric coordinates `(1-2a, a, a)`
    Three(f64, f64),
    /// weight, `a`, `b` with barycentric coordinates `(a, b, 1-a-b)`
    Six(f64, f64, f64),
}

// Symmetric rules, weights normalised to the reference area 1/2.
const TRI_DEG6: [Orbit; 3] = [
    Orbit::Three(0.058393137863189683013, 0.24928674517091042129),
    Orbit::Three(0.02542245318510340846, 0.06308901449150222834),
    Orbit::Six(0.041425537809186787597, 0.053145049844816947353, 0.31035245103378440542),
];

const TRI_DEG8: [Orbit; 5] = [
    Orbit::Centroid(0.072157803838893584126),
    Orbit::Three(0.047545817133642312397, 0.45929258829272315603),
    Orbit::Three(0.051608685267359125141, 0.17056930775176020662),
    Orbit::Three(0.016229248811599040155, 0.050547228317030975458),
    Orbit::Six(0.013615157087217497132, 0.0083947774099576053372, 0.26311282963463811342),
];

fn symmetric_rule(orbits: &[Orbit], degree: usize) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for o in orbits {
        match *o {
            Orbit::Centroid(w) => {
                points.push(Point2::new(1.0 / 3.0, 1.0 / 3.0));
                weights.push(w);
            }
            Orbit::Three(w, a) => {
                let b = 1.0 - 2.0 * a;
                for p in [(a, a), (b, a), (a, b)] {
                    points.push(Point2::new(p.0, p.1));
                    weights.push(w);
                }
            }
            Orbit::Six(w, a, b) => {
                let c = 1.0 - a - b;
                for p in [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)] {
                    points.push(Point2::new(p.0, p.1));
                    weights.push(w);
                }
            }
        }
    }
    QuadratureRule {
        points,
        weights,
        degree,
    }
}

fn triangle_rule(degree: usize) -> QuadratureRule {
    match degree {
        0 | 1 => symmetric_rule(&[Orbit::Centroid(0.5)], 1),
        2 => symmetric_rule(&[Orbit::Three(1.0 / 6.0, 1.0 / 6.0)], 2),
        3..=6 => symmetric_rule(&TRI_DEG6, 6),
        _ => symmetric_rule(&TRI_DEG8, 8),
    }
}

/// Rule on the reference element exact for polynomials of total degree
/// `degree` (quads: tensor Gauss-Legendre with `ceil((degree+1)/2)^2` points).
pub fn quadrature_rule(kind: ElementKind, degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_QUADRATURE_DEGREE {
        return Err(Error::UnsupportedQuadratureDegree(degree));
    }
    Ok(cached_rule(kind, degree).clone())
}

pub(crate) fn cached_rule(kind: ElementKind, degree: usize) -> &'static QuadratureRule {
    static TABLE: OnceLock<Vec<[QuadratureRule; 2]>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=MAX_QUADRATURE_DEGREE)
            .map(|d| [triangle_rule(d), tensor_rule(d)])
            .collect()
    });
    let row = &table[degree.min(MAX_QUADRATURE_DEGREE)];
    match kind {
        ElementKind::Triangle => &row[0],
        ElementKind::Quadrilateral => &row[1],
    }
}
