//! Convergence studies: interpolation and harmonic-map errors over a
//! hierarchy of uniformly refined grids.

mod catalog;
mod config;

use std::sync::Arc;

pub use catalog::{
    p_st, p_st_gradient, r_so3, r_so3_gradient, StudyManifold, TestMap, TestMapCatalog,
};
pub use config::{ManifoldKind, StudyConfig, StudyKind};

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::fe_basis::LagrangeSpace;
use crate::interpolation::{DiscreteMap, Scheme};
use crate::manifolds::{SpecialOrthogonal, Sphere};
use crate::mesh::Mesh;
use crate::norms::{error_vs_fine, errors_vs_function, ConvergenceTable, ErrorRecord};
use crate::solver::{minimize, prolong, SolveConfig, SolveResult};

/// Summary of one harmonic-map solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub order: usize,
    pub level: usize,
    /// True for the extra-level reference solve of the SO(3) study.
    pub reference: bool,
    pub iterations: usize,
    pub converged: bool,
    pub energy_monotone: bool,
    pub final_energy: f64,
    pub gradient_max_norm: f64,
}

/// A level that produced no errors, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFailure {
    pub order: usize,
    pub level: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct StudyOutcome {
    pub tables: Vec<ConvergenceTable>,
    pub solves: Vec<SolveReport>,
    pub failures: Vec<LevelFailure>,
}

impl StudyOutcome {
    pub fn table(&self, order: usize) -> Option<&ConvergenceTable> {
        self.tables.iter().find(|t| t.order == order)
    }

    /// True if at least one level of at least one table has errors.
    pub fn has_results(&self) -> bool {
        self.tables.iter().any(|t| t.records.iter().any(ErrorRecord::is_present))
    }
}

/// Validates `cfg` and runs the requested study.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    match (cfg.study, cfg.manifold) {
        (StudyKind::Interpolation, ManifoldKind::Sphere) => run_interpolation_study::<Sphere>(cfg),
        (StudyKind::Interpolation, ManifoldKind::So3) => run_interpolation_study::<SpecialOrthogonal>(cfg),
        (StudyKind::Harmonic, ManifoldKind::Sphere) => run_harmonic_study::<Sphere>(cfg),
        (StudyKind::Harmonic, ManifoldKind::So3) => run_harmonic_study::<SpecialOrthogonal>(cfg),
    }
}

fn spaces(meshes: &[Arc<Mesh>], order: usize) -> Result<Vec<Arc<LagrangeSpace>>> {
    meshes
        .iter()
        .map(|m| LagrangeSpace::new(m.clone(), order).map(Arc::new))
        .collect()
}

fn progress(cfg: &StudyConfig, msg: impl FnOnce() -> String) {
    if cfg.verbose {
        eprintln!("{}", msg());
    }
}

/// Errors of the nodal interpolant of the catalog map against the map itself.
pub fn run_interpolation_study<M: StudyManifold>(cfg: &StudyConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    let map = M::test_map();
    let max_level = cfg.effective_max_level();
    let meshes = Mesh::hierarchy(max_level);
    let mut out = StudyOutcome::default();
    for &order in &cfg.orders {
        let mut records = Vec::new();
        for (level, space) in spaces(&meshes, order)?.into_iter().enumerate() {
            let measured = DiscreteMap::nodal_sample(M::default(), space, cfg.scheme, map.value).and_then(|u| {
                let (l2, h1) = errors_vs_function(&u, map.value, map.gradient, cfg.quad_degree)?;
                let wall = energy(&u, cfg.quad_degree)?.wall_time;
                Ok((l2, h1, wall))
            });
            match measured {
                Ok((l2, h1, wall)) => {
                    progress(cfg, || format!("{} r={order} level {level}: L2 {l2:e} H1 {h1:e}", map.name));
                    let mut r = ErrorRecord::new(level, l2, h1);
                    r.wall_time = Some(wall);
                    records.push(r);
                }
                Err(err) => {
                    progress(cfg, || format!("{} r={order} level {level}: absent ({err})", map.name));
                    out.failures.push(LevelFailure {
                        order,
                        level,
                        reason: err.to_string(),
                    });
                    records.push(ErrorRecord::absent(level));
                }
            }
        }
        out.tables.push(ConvergenceTable::new(cfg.scheme, order, records));
    }
    Ok(out)
}

fn solve_with_catalog_boundary<M: StudyManifold>(
    initial: DiscreteMap<M>,
    cfg: &StudyConfig,
    order: usize,
    level: usize,
    reference: bool,
    out: &mut StudyOutcome,
) -> Result<SolveResult<M>> {
    let solve_cfg = SolveConfig {
        quad_degree: cfg.quad_degree,
        verbose: cfg.verbose,
        ..SolveConfig::default()
    };
    let boundary = initial.space().boundary_nodes();
    let res = minimize(&initial, &boundary, &solve_cfg)?;
    let report = SolveReport {
        order,
        level,
        reference,
        iterations: res.iterations,
        converged: res.converged,
        energy_monotone: res.energy_history.windows(2).all(|w| w[1] <= w[0]),
        final_energy: *res.energy_history.last().expect("history is never empty"),
        gradient_max_norm: res.gradient_max_norm,
    };
    progress(cfg, || format!("solve r={order} level {level}{}: {report:?}", if reference { " (reference)" } else { "" }));
    out.solves.push(report);
    Ok(res)
}

/// Harmonic maps with the catalog map as boundary datum and initial iterate.
/// The sphere study measures errors against the catalog map, which is itself
/// harmonic; otherwise errors are taken against a solution one level finer.
pub fn run_harmonic_study<M: StudyManifold>(cfg: &StudyConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    if cfg.scheme != Scheme::Projection {
        return Err(Error::InvalidConfig("harmonic studies need the projection scheme".into()));
    }
    let map = M::test_map();
    let exact = cfg.manifold == ManifoldKind::Sphere;
    let max_level = cfg.effective_max_level();
    let meshes = Mesh::hierarchy(if exact { max_level } else { max_level + 1 });
    let mut out = StudyOutcome::default();
    for &order in &cfg.orders {
        let spaces = spaces(&meshes, order)?;
        let mut solutions: Vec<Option<DiscreteMap<M>>> = Vec::new();
        for (level, space) in spaces.iter().take(max_level + 1).enumerate() {
            let solved = DiscreteMap::nodal_sample(M::default(), space.clone(), Scheme::Projection, map.value)
                .and_then(|u0| solve_with_catalog_boundary(u0, cfg, order, level, false, &mut out));
            match solved {
                Ok(res) => solutions.push(Some(res.map)),
                Err(err) => {
                    out.failures.push(LevelFailure {
                        order,
                        level,
                        reason: err.to_string(),
                    });
                    solutions.push(None);
                }
            }
        }

        let reference = if exact {
            None
        } else {
            let fine = spaces[max_level + 1].clone();
            let warm = match solutions.last().cloned().flatten() {
                Some(coarse) => prolong(&coarse, fine.clone()).and_then(|p| {
                    // boundary values come from the datum, not the coarse interpolant
                    let mut c = p.coefficients().to_vec();
                    for b in fine.boundary_nodes() {
                        c[b] = (map.value)(fine.nodes()[b]);
                    }
                    p.with_coefficients(c)
                }),
                None => DiscreteMap::nodal_sample(M::default(), fine, Scheme::Projection, map.value),
            };
            match warm.and_then(|u0| solve_with_catalog_boundary(u0, cfg, order, max_level + 1, true, &mut out)) {
                Ok(res) => Some(res.map),
                Err(err) => {
                    out.failures.push(LevelFailure {
                        order,
                        level: max_level + 1,
                        reason: format!("reference solve failed: {err}"),
                    });
                    None
                }
            }
        };

        let mut records = Vec::new();
        for (level, sol) in solutions.iter().enumerate() {
            let measured = match (sol, &reference, exact) {
                (Some(u), _, true) => errors_vs_function(u, map.value, map.gradient, cfg.quad_degree),
                (Some(u), Some(r), false) => error_vs_fine(u, r, cfg.quad_degree),
                _ => Err(Error::InvalidConfig("no reference solution available".into())),
            };
            let wall = sol.as_ref().map(|u| energy(u, cfg.quad_degree).map(|e| e.wall_time));
            match (measured, wall) {
                (Ok((l2, h1)), Some(Ok(w))) => {
                    progress(cfg, || format!("{} r={order} level {level}: L2 {l2:e} H1 {h1:e}", map.name));
                    let mut r = ErrorRecord::new(level, l2, h1);
                    r.wall_time = Some(w);
                    records.push(r);
                }
                (Err(err), _) | (_, Some(Err(err))) => {
                    if sol.is_some() {
                        out.failures.push(LevelFailure {
                            order,
                            level,
                            reason: err.to_string(),
                        });
                    }
                    records.push(ErrorRecord::absent(level));
                }
                _ => records.push(ErrorRecord::absent(level)),
            }
        }
        out.tables.push(ConvergenceTable::new(Scheme::Projection, order, records));
    }
    Ok(out)
}
