//! Riemannian trust-region minimisation of the harmonic energy over the free
//! coefficients of a projection-based discrete map, with truncated CG
//! (Steihaug–Toint) for the trust-region subproblem.

use std::sync::Arc;

use sprs::{CsMat, FillInReduction, SymmetryCheck, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::energy::{energy, energy_and_gradient, hessian_vec_raw, project_to_tangent, retract};
use crate::error::{Error, Result};
use crate::fe_basis::{LagrangeSpace, PointEval};
use crate::interpolation::{DiscreteMap, Scheme};
use crate::manifolds::{Ambient, EmbeddedManifold};
use crate::norms::DEFAULT_QUAD_DEGREE;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub max_outer_iterations: usize,
    /// Stop once the max-norm of an interior correction is at most this.
    pub correction_tol: f64,
    pub initial_radius: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Steps with actual/predicted decrease below this are rejected and the radius shrinks.
    pub shrink_threshold: f64,
    /// Above this ratio a step that hit the boundary doubles the radius.
    pub expand_threshold: f64,
    /// `None` means five times the number of free nodes.
    pub tcg_max_iterations: Option<usize>,
    pub tcg_relative_tol: f64,
    pub tcg_theta: f64,
    /// The iteration also stops once the gradient max-norm is at most this.
    pub gradient_tol: f64,
    pub preconditioner: Preconditioner,
    pub quad_degree: usize,
    pub verbose: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_outer_iterations: 200,
            correction_tol: 1e-6,
            initial_radius: 1.0,
            min_radius: 1e-10,
            max_radius: 1e4,
            shrink_threshold: 0.1,
            expand_threshold: 0.75,
            tcg_max_iterations: None,
            tcg_relative_tol: 1e-2,
            tcg_theta: 1.0,
            gradient_tol: 1e-12,
            preconditioner: Preconditioner::Stiffness,
            quad_degree: DEFAULT_QUAD_DEGREE,
            verbose: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("correction_tol", self.correction_tol),
            ("initial_radius", self.initial_radius),
            ("min_radius", self.min_radius),
            ("tcg_relative_tol", self.tcg_relative_tol),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
        if !(self.min_radius <= self.initial_radius && self.initial_radius <= self.max_radius) {
            return Err(Error::InvalidConfig("need min_radius <= initial_radius <= max_radius".into()));
        }
        if !(0.0 < self.shrink_threshold && self.shrink_threshold < self.expand_threshold && self.expand_threshold < 1.0) {
            return Err(Error::InvalidConfig("need 0 < shrink_threshold < expand_threshold < 1".into()));
        }
        if self.tcg_theta < 0.0 {
            return Err(Error::InvalidConfig("tcg_theta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<M: EmbeddedManifold> {
    pub map: DiscreteMap<M>,
    pub iterations: usize,
    /// Max-norm of the Riemannian gradient over free nodes at the final map.
    pub gradient_max_norm: f64,
    /// Energy of the initial map followed by the energy after each accepted step.
    pub energy_history: Vec<f64>,
    pub converged: bool,
    /// Max-norm of the last computed correction.
    pub last_correction: f64,
}

fn dot<P: Ambient>(a: &[P], b: &[P]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn max_norm<P: Ambient>(a: &[P]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.max_abs()))
}

fn axpy<P: Ambient>(y: &mut [P], alpha: f64, x: &[P]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += *b * alpha;
    }
}

const TCG_RESIDUAL_FLOOR: f64 = 1e-6;

/// Preconditioner for the trust-region subproblem. The trust region is
/// measured in the norm induced by the preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    Identity,
    /// Scalar Dirichlet stiffness matrix of the Lagrange space, applied per
    /// ambient component between tangent projections.
    Stiffness,
}

/// Sparse LDLᵀ factor of the scalar stiffness matrix with identity rows at
/// fixed nodes.
struct StiffnessSolver {
    factor: LdlNumeric<f64, usize>,
}

impl StiffnessSolver {
    fn new(space: &LagrangeSpace, fixed: &[bool], quad_degree: usize) -> Result<Self> {
        let n = space.node_count();
        let mut tri = TriMat::new((n, n));
        let mut buf = PointEval::default();
        for e in 0..space.element_count() {
            let dofs = space.element_dofs(e);
            space.integrate_element(e, quad_degree, &mut buf, |pt, w| {
                for (a, &i) in dofs.iter().enumerate() {
                    if fixed[i] {
                        continue;
                    }
                    for (b, &j) in dofs.iter().enumerate() {
                        if !fixed[j] {
                            tri.add_triplet(i, j, w * pt.gradients[a].dot(&pt.gradients[b]));
                        }
                    }
                }
                Ok(())
            })?;
        }
        for (i, _) in fixed.iter().enumerate().filter(|(_, f)| **f) {
            tri.add_triplet(i, i, 1.0);
        }
        let mat: CsMat<f64> = tri.to_csc();
        let factor = Ldl::new()
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .numeric(mat.view())
            .map_err(|e| Error::InvalidConfig(format!("stiffness factorisation failed: {e:?}")))?;
        Ok(StiffnessSolver { factor })
    }

    fn solve<P: Ambient>(&self, r: &[P]) -> Vec<P> {
        let mut out = vec![P::zero(); r.len()];
        let mut rhs = vec![0.0; r.len()];
        for k in 0..P::DIM {
            for (x, v) in rhs.iter_mut().zip(r) {
                *x = v.coords()[k];
            }
            let z: Vec<f64> = self.factor.solve(&rhs[..]);
            for (o, x) in out.iter_mut().zip(z) {
                o.coords_mut()[k] = x;
            }
        }
        out
    }
}

struct Problem<'a, M: EmbeddedManifold> {
    fixed: Vec<bool>,
    cfg: &'a SolveConfig,
    stiffness: Option<StiffnessSolver>,
    _m: std::marker::PhantomData<M>,
}

impl<M: EmbeddedManifold> Problem<'_, M> {
    fn mask(&self, v: &mut [M::Point]) {
        for (x, &f) in v.iter_mut().zip(&self.fixed) {
            if f {
                *x = M::Point::zero();
            }
        }
    }

    fn gradient(&self, u: &DiscreteMap<M>) -> Result<(f64, Vec<M::Point>)> {
        let (e, g) = energy_and_gradient(u, self.cfg.quad_degree)?;
        let mut g = project_to_tangent(u, g);
        self.mask(&mut g);
        Ok((e, g))
    }

    fn hessian(&self, u: &DiscreteMap<M>, v: &[M::Point]) -> Result<Vec<M::Point>> {
        let mut h = hessian_vec_raw(u, v, self.cfg.quad_degree)?;
        self.mask(&mut h);
        Ok(h)
    }

    fn precondition(&self, u: &DiscreteMap<M>, r: &[M::Point]) -> Vec<M::Point> {
        match &self.stiffness {
            None => r.to_vec(),
            Some(k) => {
                let mut z = project_to_tangent(u, k.solve(&project_to_tangent(u, r.to_vec())));
                self.mask(&mut z);
                z
            }
        }
    }

    /// Approximately minimises `⟨g,η⟩ + ½⟨η,Hη⟩` over `‖η‖_M ≤ radius`
    /// (preconditioned Steihaug–Toint). Returns `(η, Hη, hit_boundary)`.
    fn truncated_cg(
        &self,
        u: &DiscreteMap<M>,
        grad: &[M::Point],
        radius: f64,
        max_iter: usize,
    ) -> Result<(Vec<M::Point>, Vec<M::Point>, bool)> {
        let n = grad.len();
        let mut eta = vec![M::Point::zero(); n];
        let mut heta = vec![M::Point::zero(); n];
        let mut r = grad.to_vec();
        let r0 = dot(&r, &r).sqrt();
        if r0 == 0.0 {
            return Ok((eta, heta, false));
        }
        // finite-difference Hessians limit the attainable relative residual
        let target = r0 * r0.powf(self.cfg.tcg_theta).min(self.cfg.tcg_relative_tol).max(TCG_RESIDUAL_FLOOR);
        let mut z = self.precondition(u, &r);
        let mut zr = dot(&z, &r);
        let mut d: Vec<M::Point> = z.iter().map(|x| -*x).collect();
        // M-norm inner products of the iterate and the search direction
        let (mut e_e, mut e_d, mut d_d) = (0.0, 0.0, zr);
        let rr2 = radius * radius;
        for _ in 0..max_iter {
            let hd = self.hessian(u, &d)?;
            let dhd = dot(&d, &hd);
            let alpha = zr / dhd;
            let next = e_e + 2.0 * alpha * e_d + alpha * alpha * d_d;
            if dhd <= 0.0 || next >= rr2 {
                let tau = (-e_d + (e_d * e_d + d_d * (rr2 - e_e)).max(0.0).sqrt()) / d_d;
                axpy(&mut eta, tau, &d);
                axpy(&mut heta, tau, &hd);
                return Ok((eta, heta, true));
            }
            e_e = next;
            axpy(&mut eta, alpha, &d);
            axpy(&mut heta, alpha, &hd);
            axpy(&mut r, alpha, &hd);
            if dot(&r, &r).sqrt() <= target {
                break;
            }
            z = self.precondition(u, &r);
            let zr_next = dot(&z, &r);
            if !(zr_next > 0.0) {
                break;
            }
            let beta = zr_next / zr;
            zr = zr_next;
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = *di * beta - *zi;
            }
            e_d = beta * (e_d + alpha * d_d);
            d_d = zr + beta * beta * d_d;
        }
        Ok((eta, heta, false))
    }
}

/// Minimises the harmonic energy keeping the coefficients at
/// `boundary_fixed` untouched. Non-convergence is reported through
/// [`SolveResult::converged`], not as an error.
pub fn minimize<M: EmbeddedManifold>(
    initial: &DiscreteMap<M>,
    boundary_fixed: &[usize],
    cfg: &SolveConfig,
) -> Result<SolveResult<M>> {
    cfg.validate()?;
    if initial.scheme() != Scheme::Projection {
        return Err(Error::RequiresProjectionScheme);
    }
    let n = initial.coefficients().len();
    let mut fixed = vec![false; n];
    for &i in boundary_fixed {
        if i >= n {
            return Err(Error::DimensionMismatch { expected: n, found: i + 1 });
        }
        fixed[i] = true;
    }
    let free = fixed.iter().filter(|f| !**f).count();
    let stiffness = match cfg.preconditioner {
        Preconditioner::Stiffness if free > 0 => Some(StiffnessSolver::new(initial.space(), &fixed, cfg.quad_degree)?),
        _ => None,
    };
    let problem = Problem::<M> {
        fixed,
        cfg,
        stiffness,
        _m: std::marker::PhantomData,
    };
    let mut u = initial.clone();
    let (mut e, mut grad) = problem.gradient(&u)?;
    let mut result = SolveResult {
        map: initial.clone(),
        iterations: 0,
        gradient_max_norm: max_norm(&grad),
        energy_history: vec![e],
        converged: free == 0,
        last_correction: 0.0,
    };
    if free == 0 {
        return Ok(result);
    }
    let max_tcg = cfg.tcg_max_iterations.unwrap_or(5 * free).max(1);
    let mut radius = cfg.initial_radius;
    for iter in 1..=cfg.max_outer_iterations {
        if max_norm(&grad) <= cfg.gradient_tol {
            result.converged = true;
            result.last_correction = 0.0;
            break;
        }
        result.iterations = iter;
        let (eta, heta, hit) = problem.truncated_cg(&u, &grad, radius, max_tcg)?;
        let step = max_norm(&eta);
        result.last_correction = step;
        let predicted = -(dot(&grad, &eta) + 0.5 * dot(&eta, &heta));
        let candidate = retract(&u, &eta, 1.0).and_then(|c| {
            let (ec, gc) = problem.gradient(&c)?;
            Ok((c, ec, gc))
        });
        let (rho, accepted) = match &candidate {
            Ok((_, ec, _)) => {
                let actual = e - ec;
                let rho = if predicted > 0.0 { actual / predicted } else if actual >= 0.0 { 1.0 } else { -1.0 };
                (rho, rho >= cfg.shrink_threshold && *ec <= e)
            }
            Err(_) => (f64::NEG_INFINITY, false),
        };
        if rho < cfg.shrink_threshold {
            radius = (0.25 * radius).max(cfg.min_radius);
        } else if rho > cfg.expand_threshold && hit {
            radius = (2.0 * radius).min(cfg.max_radius);
        }
        if accepted {
            let (c, ec, gc) = candidate.expect("accepted step has a candidate");
            u = c;
            e = ec;
            grad = gc;
            result.energy_history.push(e);
        }
        if cfg.verbose {
            eprintln!(
                "{iter}, {e:.12e}, {:.3e}, {step:.3e}, {radius:.3e}, {accepted}",
                max_norm(&grad)
            );
        }
        if step <= cfg.correction_tol && !hit {
            result.converged = true;
            break;
        }
        if radius <= cfg.min_radius && !accepted {
            break;
        }
    }
    result.gradient_max_norm = max_norm(&grad);
    result.map = u;
    Ok(result)
}

/// Evaluates `u` at the nodes of a space on a descendant mesh. Nodes that
/// coincide with nodes of `u`'s space copy the coefficient verbatim.
pub fn prolong<M: EmbeddedManifold>(u: &DiscreteMap<M>, fine_space: Arc<LagrangeSpace>) -> Result<DiscreteMap<M>> {
    let cspace = u.space();
    let cmesh = cspace.mesh();
    let fmesh = fine_space.mesh();
    if !fmesh.descends_from(cmesh) {
        return Err(Error::NotInLineage);
    }
    let mut coefficients: Vec<Option<M::Point>> = vec![None; fine_space.node_count()];
    let mut buf = PointEval::default();
    for e in 0..fine_space.element_count() {
        let basis = fine_space.basis(e);
        for (local, &g) in basis.nodes().iter().zip(fine_space.element_dofs(e)) {
            if coefficients[g].is_some() {
                continue;
            }
            let (ce, cp) = fmesh.locate_in_ancestor(cmesh, e, local.reference)?;
            let cbasis = cspace.basis(ce);
            let shared = cbasis
                .nodes()
                .iter()
                .position(|n| (n.reference - cp).norm() < 1e-12);
            let value = match shared {
                Some(k) => u.coefficients()[cspace.element_dofs(ce)[k]],
                None => {
                    cspace.evaluate_at(ce, cp, &mut buf);
                    u.value_at(ce, &buf)?
                }
            };
            coefficients[g] = Some(value);
        }
    }
    let coefficients = coefficients
        .into_iter()
        .map(|c| c.expect("every node belongs to an element"))
        .collect();
    DiscreteMap::new(*u.manifold(), fine_space, u.scheme(), coefficients)
}

/// Convenience: energy of a map with the solver's default quadrature.
pub fn map_energy<M: EmbeddedManifold>(u: &DiscreteMap<M>) -> Result<f64> {
    Ok(energy(u, DEFAULT_QUAD_DEGREE)?.value)
}
