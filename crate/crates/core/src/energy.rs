//! Dirichlet energy `½∫|du|²` of discrete maps and its derivatives with
//! respect to the nodal coefficients.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fe_basis::PointEval;
use crate::interpolation::{combine, combine_gradient, DiscreteMap, Scheme, TangentField};
use crate::manifolds::{Ambient, EmbeddedManifold, ProjectionJet};
use crate::norms::tag_element;

/// Base step of the central difference used for Hessian-vector products.
pub const HESSIAN_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub value: f64,
    pub per_element: Vec<f64>,
    /// Seconds spent in the evaluation.
    pub wall_time: f64,
}

/// Harmonic energy by quadrature of the squared Frobenius norm of the
/// world-coordinate differential. Works for both schemes.
pub fn energy<M: EmbeddedManifold>(u: &DiscreteMap<M>, quad_degree: usize) -> Result<EnergyReport> {
    let start = Instant::now();
    let space = u.space();
    let mut buf = PointEval::default();
    let mut per_element = Vec::with_capacity(space.element_count());
    for e in 0..space.element_count() {
        let mut acc = 0.0;
        match u.scheme() {
            Scheme::Projection => {
                // only the differential is needed, skip the value computation
                let dofs = space.element_dofs(e);
                let c = u.coefficients();
                space.integrate_element(e, quad_degree, &mut buf, |pt, w| {
                    let y = combine(c, dofs, &pt.values);
                    let g = combine_gradient(c, dofs, &pt.gradients);
                    let jet = u.manifold().linearize(&y).map_err(|err| tag_element(err, e))?;
                    acc += w * (jet.differential(&g[0]).norm_squared() + jet.differential(&g[1]).norm_squared());
                    Ok(())
                })?;
            }
            Scheme::Geodesic => {
                space.integrate_element(e, quad_degree, &mut buf, |pt, w| {
                    let (_, d) = u.value_and_gradient_at(e, pt).map_err(|err| tag_element(err, e))?;
                    acc += w * (d[0].norm_squared() + d[1].norm_squared());
                    Ok(())
                })?;
            }
        }
        per_element.push(0.5 * acc);
    }
    Ok(EnergyReport {
        value: per_element.iter().sum(),
        per_element,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Energy together with `∂E/∂c_i` for every node, projection scheme only.
pub fn energy_and_gradient<M: EmbeddedManifold>(
    u: &DiscreteMap<M>,
    quad_degree: usize,
) -> Result<(f64, Vec<M::Point>)> {
    if u.scheme() != Scheme::Projection {
        return Err(Error::RequiresProjectionScheme);
    }
    let space = u.space();
    let c = u.coefficients();
    let mut grad = vec![M::Point::zero(); c.len()];
    let mut buf = PointEval::default();
    let mut total = 0.0;
    for e in 0..space.element_count() {
        let dofs = space.element_dofs(e);
        let mut acc = 0.0;
        space.integrate_element(e, quad_degree, &mut buf, |pt, w| {
            let y = combine(c, dofs, &pt.values);
            let g = combine_gradient(c, dofs, &pt.gradients);
            let jet = u.manifold().linearize(&y).map_err(|err| tag_element(err, e))?;
            let d = [jet.differential(&g[0]), jet.differential(&g[1])];
            acc += w * (d[0].norm_squared() + d[1].norm_squared());
            // E = ½Σ|dP(y)[g_j]|², with dP self-adjoint and ⟨D, d²P[a, b]⟩ fully symmetric:
            // ∂E/∂c_i = Σ_j ∂_jφ_i dP(y)[D_j] + φ_i Σ_j d²P(y)[D_j, g_j]
            let a = [jet.differential(&d[0]) * w, jet.differential(&d[1]) * w];
            let b = (jet.second_differential(&d[0], &g[0]) + jet.second_differential(&d[1], &g[1])) * w;
            for (k, &node) in dofs.iter().enumerate() {
                let dphi = pt.gradients[k];
                grad[node] += a[0] * dphi.x + a[1] * dphi.y + b * pt.values[k];
            }
            Ok(())
        })?;
        total += 0.5 * acc;
    }
    Ok((total, grad))
}

/// `∂E/∂c_i ∈ R^n` for every node.
pub fn euclidean_gradient<M: EmbeddedManifold>(u: &DiscreteMap<M>, quad_degree: usize) -> Result<Vec<M::Point>> {
    Ok(energy_and_gradient(u, quad_degree)?.1)
}

/// Tangent projection of the Euclidean gradient at each coefficient.
pub fn riemannian_gradient<M: EmbeddedManifold>(u: &DiscreteMap<M>, quad_degree: usize) -> Result<TangentField<M>> {
    let g = euclidean_gradient(u, quad_degree)?;
    Ok(TangentField::new_unchecked(u.clone(), project_to_tangent(u, g)))
}

pub(crate) fn project_to_tangent<M: EmbeddedManifold>(u: &DiscreteMap<M>, mut g: Vec<M::Point>) -> Vec<M::Point> {
    let m = u.manifold();
    for (v, c) in g.iter_mut().zip(u.coefficients()) {
        *v = m.tangent_project(c, v);
    }
    g
}

/// `c_i ← P(c_i + t η_i)`.
pub fn retract<M: EmbeddedManifold>(u: &DiscreteMap<M>, eta: &[M::Point], t: f64) -> Result<DiscreteMap<M>> {
    let m = u.manifold();
    let coefficients = u
        .coefficients()
        .iter()
        .zip(eta)
        .map(|(c, v)| if t == 0.0 || *v == M::Point::zero() { Ok(*c) } else { m.project(&(*c + *v * t)) })
        .collect::<Result<Vec<_>>>()?;
    Ok(u.with_coefficients_unchecked(coefficients))
}

/// Raw Hessian-vector product on nodal vectors, see [`hessian_vec`].
pub(crate) fn hessian_vec_raw<M: EmbeddedManifold>(
    u: &DiscreteMap<M>,
    eta: &[M::Point],
    quad_degree: usize,
) -> Result<Vec<M::Point>> {
    let scale = eta.iter().fold(0.0f64, |s, v| s.max(v.norm()));
    if scale == 0.0 {
        return Ok(vec![M::Point::zero(); eta.len()]);
    }
    let dir: Vec<M::Point> = eta.iter().map(|v| *v * (1.0 / scale)).collect();
    let t = HESSIAN_FD_STEP;
    let plus = retract(u, &dir, t)?;
    let minus = retract(u, &dir, -t)?;
    let gp = project_to_tangent(&plus, euclidean_gradient(&plus, quad_degree)?);
    let gm = project_to_tangent(&minus, euclidean_gradient(&minus, quad_degree)?);
    let m = u.manifold();
    let f = scale / (2.0 * t);
    Ok(u
        .coefficients()
        .iter()
        .zip(gp.iter().zip(&gm))
        .map(|(c, (a, b))| m.tangent_project(c, &((*a - *b) * f)))
        .collect())
}

/// Riemannian Hessian applied to `eta`: central difference of the Riemannian
/// gradient along the projection retraction, both gradients projected to the
/// tangent spaces at the base coefficients.
pub fn hessian_vec<M: EmbeddedManifold>(
    u: &DiscreteMap<M>,
    eta: &TangentField<M>,
    quad_degree: usize,
) -> Result<TangentField<M>> {
    if eta.base().coefficients() != u.coefficients() {
        return Err(Error::InvalidConfig("tangent field is based on a different map".into()));
    }
    let h = hessian_vec_raw(u, eta.vectors(), quad_degree)?;
    Ok(TangentField::new_unchecked(u.clone(), h))
}
