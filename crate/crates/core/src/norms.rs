//! Broken L² norms and H¹ seminorms of errors, experimental orders of
//! convergence and the convergence table CSV format.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fe_basis::{PointEval, MAX_QUADRATURE_DEGREE};
use crate::interpolation::{DiscreteMap, Differential, Scheme};
use crate::manifolds::{Ambient, EmbeddedManifold};
use crate::mesh::Point2;

/// Errors below this are treated as exact reproduction and left out of
/// order estimates.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Default quadrature degree. Error integrals raise it to `2r + 2` for order `r`.
pub const DEFAULT_QUAD_DEGREE: usize = 6;

/// Degree actually used for error integrals of order-`order` maps: at least
/// `2 order + 2`, capped by the largest available rule.
pub fn error_quad_degree(requested: usize, order: usize) -> usize {
    requested.max(2 * order + 2).min(MAX_QUADRATURE_DEGREE)
}

/// `(‖u - f‖_{L²}, |u - f|_{H¹})` in one sweep over the mesh.
pub fn errors_vs_function<M: EmbeddedManifold>(
    u: &DiscreteMap<M>,
    f: impl Fn(Point2) -> M::Point,
    grad_f: impl Fn(Point2) -> Differential<M::Point>,
    quad_degree: usize,
) -> Result<(f64, f64)> {
    let space = u.space();
    let quad_degree = error_quad_degree(quad_degree, space.order());
    let mut buf = PointEval::default();
    let (mut l2, mut h1) = (0.0, 0.0);
    for e in 0..space.element_count() {
        let (mut el2, mut eh1) = (0.0, 0.0);
        space.integrate_element(e, quad_degree, &mut buf, |pt, w| {
            let (v, dv) = u.value_and_gradient_at(e, pt).map_err(|err| tag_element(err, e))?;
            let df = grad_f(pt.x);
            el2 += w * (v - f(pt.x)).norm_squared();
            eh1 += w * ((dv[0] - df[0]).norm_squared() + (dv[1] - df[1]).norm_squared());
            Ok(())
        })?;
        l2 += el2;
        h1 += eh1;
    }
    Ok((l2.sqrt(), h1.sqrt()))
}

/// `‖u - f‖_{L²(Ω, R^n)}`.
pub fn l2_error<M: EmbeddedManifold>(
    u: &DiscreteMap<M>,
    f: impl Fn(Point2) -> M::Point,
    quad_degree: usize,
) -> Result<f64> {
    let space = u.space();
    let quad_degree = error_quad_degree(quad_degree, space.order());
    let mut buf = PointEval::default();
    let mut total = 0.0;
    for e in 0..space.element_count() {
        let mut acc = 0.0;
        space.integrate_element(e, quad_degree, &mut buf, |pt, w| {
            let v = u.value_at(e, pt).map_err(|err| tag_element(err, e))?;
            acc += w * (v - f(pt.x)).norm_squared();
            Ok(())
        })?;
        total += acc;
    }
    Ok(total.sqrt())
}

/// Broken H¹ seminorm `|u - f|_{H¹(Ω, R^n)}` given the world gradient of `f`.
pub fn h1_semi_error<M: EmbeddedManifold>(
    u: &DiscreteMap<M>,
    grad_f: impl Fn(Point2) -> Differential<M::Point>,
    quad_degree: usize,
) -> Result<f64> {
    let space = u.space();
    let quad_degree = error_quad_degree(quad_degree, space.order());
    let mut buf = PointEval::default();
    let mut total = 0.0;
    for e in 0..space.element_count() {
        let mut acc = 0.0;
        space.integrate_element(e, quad_degree, &mut buf, |pt, w| {
            let (_, dv) = u.value_and_gradient_at(e, pt).map_err(|err| tag_element(err, e))?;
            let df = grad_f(pt.x);
            acc += w * ((dv[0] - df[0]).norm_squared() + (dv[1] - df[1]).norm_squared());
            Ok(())
        })?;
        total += acc;
    }
    Ok(total.sqrt())
}

/// L² and H¹-seminorm distance between a coarse map and a map on a
/// descendant mesh. Quadrature runs on the fine mesh; the coarse map is
/// evaluated through the refinement lineage.
pub fn error_vs_fine<M: EmbeddedManifold>(
    coarse: &DiscreteMap<M>,
    fine: &DiscreteMap<M>,
    quad_degree: usize,
) -> Result<(f64, f64)> {
    let cspace = coarse.space();
    let fspace = fine.space();
    let cmesh = cspace.mesh();
    if !fspace.mesh().descends_from(cmesh) {
        return Err(Error::NotInLineage);
    }
    let quad_degree = error_quad_degree(quad_degree, cspace.order().max(fspace.order()));
    let mut fbuf = PointEval::default();
    let mut cbuf = PointEval::default();
    let (mut l2, mut h1) = (0.0, 0.0);
    for e in 0..fspace.element_count() {
        let (mut el2, mut eh1) = (0.0, 0.0);
        fspace.integrate_element(e, quad_degree, &mut fbuf, |pt, w| {
            let (v, dv) = fine.value_and_gradient_at(e, pt).map_err(|err| tag_element(err, e))?;
            let (ce, cref) = fspace.mesh().locate_in_ancestor(cmesh, e, pt.ref_point)?;
            cspace.evaluate_at(ce, cref, &mut cbuf);
            let (cv, cdv) = coarse.value_and_gradient_at(ce, &cbuf).map_err(|err| tag_element(err, ce))?;
            el2 += w * (v - cv).norm_squared();
            eh1 += w * ((dv[0] - cdv[0]).norm_squared() + (dv[1] - cdv[1]).norm_squared());
            Ok(())
        })?;
        l2 += el2;
        h1 += eh1;
    }
    Ok((l2.sqrt(), h1.sqrt()))
}

pub(crate) fn tag_element(err: Error, element: usize) -> Error {
    match err {
        Error::OutsideProjectionDomain(reason) => Error::ElementOutsideProjectionDomain { element, reason },
        other => other,
    }
}

/// Experimental orders of convergence `log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidErrorSequence(format!(
            "need two or more matching entries, got {} errors and {} sizes",
            errors.len(),
            hs.len()
        )));
    }
    if let Some(bad) = errors.iter().chain(hs).find(|x| !(**x > 0.0)) {
        return Err(Error::InvalidErrorSequence(format!("non-positive entry {bad}")));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Errors measured on one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub level: usize,
    /// Normalised mesh size `2^-level`.
    pub h: f64,
    /// `None` when the level could not be computed.
    pub l2: Option<f64>,
    pub h1_semi: Option<f64>,
    /// Seconds for one evaluation of the harmonic energy on this level.
    pub wall_time: Option<f64>,
}

impl ErrorRecord {
    pub fn new(level: usize, l2: f64, h1_semi: f64) -> Self {
        ErrorRecord {
            level,
            h: normalized_mesh_size(level),
            l2: Some(l2),
            h1_semi: Some(h1_semi),
            wall_time: None,
        }
    }

    pub fn absent(level: usize) -> Self {
        ErrorRecord {
            level,
            h: normalized_mesh_size(level),
            l2: None,
            h1_semi: None,
            wall_time: None,
        }
    }

    pub fn is_present(&self) -> bool {
        self.l2.is_some()
    }
}

pub fn normalized_mesh_size(level: usize) -> f64 {
    0.5f64.powi(level as i32)
}

/// Errors over a sequence of levels for one scheme and polynomial order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub scheme: Scheme,
    pub order: usize,
    pub records: Vec<ErrorRecord>,
    /// `eoc_l2[k]` compares `records[k]` with `records[k + 1]`.
    pub eoc_l2: Vec<Option<f64>>,
    pub eoc_h1: Vec<Option<f64>>,
}

fn pair_eoc(a: Option<f64>, b: Option<f64>, ha: f64, hb: f64) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a >= ERROR_FLOOR && b >= ERROR_FLOOR => {
            eoc(&[a, b], &[ha, hb]).ok().map(|v| v[0])
        }
        _ => None,
    }
}

impl ConvergenceTable {
    pub fn new(scheme: Scheme, order: usize, records: Vec<ErrorRecord>) -> Self {
        let eoc_l2 = records
            .windows(2)
            .map(|w| pair_eoc(w[0].l2, w[1].l2, w[0].h, w[1].h))
            .collect();
        let eoc_h1 = records
            .windows(2)
            .map(|w| pair_eoc(w[0].h1_semi, w[1].h1_semi, w[0].h, w[1].h))
            .collect();
        ConvergenceTable {
            scheme,
            order,
            records,
            eoc_l2,
            eoc_h1,
        }
    }

    /// The last `n` EOC values, or `None` if fewer exist or any is missing.
    pub fn final_eocs(list: &[Option<f64>], n: usize) -> Option<Vec<f64>> {
        if list.len() < n {
            return None;
        }
        list[list.len() - n..].iter().copied().collect()
    }
}

pub const CSV_HEADER: &str = "scheme,order,level,h,l2,h1semi,eoc_l2,eoc_h1,wall_time";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Serialises tables to CSV with columns [`CSV_HEADER`].
pub fn tables_to_csv(tables: &[ConvergenceTable]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for t in tables {
        for (k, r) in t.records.iter().enumerate() {
            let (el2, eh1) = if k == 0 {
                (None, None)
            } else {
                (t.eoc_l2[k - 1], t.eoc_h1[k - 1])
            };
            let _ = writeln!(
                s,
                "{},{},{},{:e},{},{},{},{},{}",
                t.scheme,
                t.order,
                r.level,
                r.h,
                opt(r.l2),
                opt(r.h1_semi),
                opt(el2),
                opt(eh1),
                opt(r.wall_time)
            );
        }
    }
    s
}

/// Parses the output of [`tables_to_csv`].
pub fn tables_from_csv(text: &str) -> Result<Vec<ConvergenceTable>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("bad CSV header {other:?}"))),
    }
    let mut tables: Vec<ConvergenceTable> = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 9 {
            return Err(Error::Parse(format!("expected 9 columns in `{line}`")));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("bad number `{s}`")))
            }
        };
        let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer `{s}`")));
        let scheme: Scheme = cols[0].parse()?;
        let order = int(cols[1])?;
        let record = ErrorRecord {
            level: int(cols[2])?,
            h: num(cols[3])?.ok_or_else(|| Error::Parse("missing h".into()))?,
            l2: num(cols[4])?,
            h1_semi: num(cols[5])?,
            wall_time: num(cols[8])?,
        };
        let (el2, eh1) = (num(cols[6])?, num(cols[7])?);
        match tables.last_mut() {
            Some(t) if t.scheme == scheme && t.order == order => {
                t.records.push(record);
                t.eoc_l2.push(el2);
                t.eoc_h1.push(eh1);
            }
            _ => tables.push(ConvergenceTable {
                scheme,
                order,
                records: vec![record],
                eoc_l2: Vec::new(),
                eoc_h1: Vec::new(),
            }),
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe_basis::LagrangeSpace;
    use crate::manifolds::Sphere;
    use crate::mesh::Mesh;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn space(level: usize, order: usize) -> Arc<LagrangeSpace> {
        let meshes = Mesh::hierarchy(level);
        Arc::new(LagrangeSpace::new(meshes[level].clone(), order).unwrap())
    }

    #[test]
    fn eoc_examples() {
        assert_relative_eq!(eoc(&[0.4, 0.1], &[1.0, 0.5]).unwrap()[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(eoc(&[8.0, 1.0], &[2.0, 1.0]).unwrap()[0], 3.0, epsilon = 1e-14);
        assert_eq!(eoc(&[0.3, 0.3, 0.3], &[1.0, 0.5, 0.25]).unwrap(), vec![0.0, 0.0]);
        assert!(eoc(&[0.0, 1.0], &[1.0, 0.5]).is_err());
        assert!(eoc(&[1.0], &[1.0]).is_err());
        assert!(eoc(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn constant_maps() {
        let s = space(0, 1);
        let p = Vector3::new(0.0, 0.0, 1.0);
        let q = Vector3::new(0.0, 0.6, 0.8);
        let u = DiscreteMap::nodal_sample(Sphere, s, Scheme::Projection, |_| p).unwrap();
        let l2 = l2_error(&u, |_| q, 6).unwrap();
        assert_relative_eq!(l2, 10.0 * (p - q).norm(), epsilon = 1e-12);
        let h1 = h1_semi_error(&u, |_| [Vector3::zeros(); 2], 6).unwrap();
        assert!(h1 < 1e-14);
        assert!(l2_error(&u, |_| p, 6).unwrap() < 1e-10);
    }

    #[test]
    fn error_against_itself_and_prolonged_constant() {
        let meshes = Mesh::hierarchy(1);
        let coarse = Arc::new(LagrangeSpace::new(meshes[0].clone(), 2).unwrap());
        let fine = Arc::new(LagrangeSpace::new(meshes[1].clone(), 2).unwrap());
        let f = |x: Point2| {
            let v = Vector3::new(0.1 * x.x, 0.1 * x.y, 1.0);
            v / v.norm()
        };
        let u = DiscreteMap::nodal_sample(Sphere, coarse.clone(), Scheme::Projection, f).unwrap();
        assert_eq!(error_vs_fine(&u, &u, 6).unwrap(), (0.0, 0.0));
        let p = Vector3::new(0.0, 0.0, 1.0);
        let uc = DiscreteMap::nodal_sample(Sphere, coarse.clone(), Scheme::Projection, |_| p).unwrap();
        let uf = DiscreteMap::nodal_sample(Sphere, fine.clone(), Scheme::Projection, |_| p).unwrap();
        let (a, b) = error_vs_fine(&uc, &uf, 6).unwrap();
        assert!(a < 1e-14 && b < 1e-14);
        // wrong direction / unrelated meshes
        assert_eq!(error_vs_fine(&uf, &uc, 6), Err(Error::NotInLineage));
        let other = Arc::new(LagrangeSpace::new(Arc::new(Mesh::build_coarse_grid()), 2).unwrap());
        let uo = DiscreteMap::nodal_sample(Sphere, other, Scheme::Projection, |_| p).unwrap();
        assert_eq!(error_vs_fine(&uo, &uf, 6), Err(Error::NotInLineage));
    }

    #[test]
    fn combined_sweep_matches_separate_norms() {
        let s = space(1, 2);
        let f = |x: Point2| {
            let v = Vector3::new((0.3 * x.x).sin(), 0.2 * x.y, 1.0);
            v / v.norm()
        };
        let u = DiscreteMap::nodal_sample(Sphere, s, Scheme::Projection, f).unwrap();
        let zero = |_: Point2| [Vector3::zeros(); 2];
        let (l2, h1) = errors_vs_function(&u, f, zero, 6).unwrap();
        assert_eq!(l2, l2_error(&u, f, 6).unwrap());
        assert_eq!(h1, h1_semi_error(&u, zero, 6).unwrap());
    }

    #[test]
    fn table_eocs_skip_absent_and_floored_rows() {
        let mut recs = vec![
            ErrorRecord::absent(0),
            ErrorRecord::new(1, 0.4, 1.0),
            ErrorRecord::new(2, 0.1, 0.5),
            ErrorRecord::new(3, 1e-13, 0.25),
        ];
        recs[2].wall_time = Some(0.125);
        let t = ConvergenceTable::new(Scheme::Projection, 1, recs);
        assert_eq!(t.eoc_l2.len(), 3);
        assert_eq!(t.eoc_l2[0], None);
        assert_relative_eq!(t.eoc_l2[1].unwrap(), 2.0, epsilon = 1e-14);
        assert_eq!(t.eoc_l2[2], None);
        assert_relative_eq!(t.eoc_h1[2].unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(ConvergenceTable::final_eocs(&t.eoc_h1, 2), Some(vec![1.0, 1.0]));
        assert_eq!(ConvergenceTable::final_eocs(&t.eoc_l2, 2), None);

        let csv = tables_to_csv(&[t.clone()]);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(tables_from_csv(&csv).unwrap(), vec![t]);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(tables_from_csv("nope\n").is_err());
        assert!(tables_from_csv(&format!("{CSV_HEADER}\nprojection,1,0\n")).is_err());
        assert!(tables_from_csv(&format!("{CSV_HEADER}\nfoo,1,0,1,,,,,\n")).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            errs in proptest::collection::vec((1e-14f64..10.0, 1e-14f64..10.0, proptest::option::of(0.0f64..5.0), any::<bool>()), 1..7),
            order in 1usize..4,
            geodesic in any::<bool>(),
        ) {
            let records = errs
                .iter()
                .enumerate()
                .map(|(k, &(a, b, t, present))| {
                    let mut r = if present { ErrorRecord::new(k, a, b) } else { ErrorRecord::absent(k) };
                    r.wall_time = t;
                    r
                })
                .collect();
            let scheme = if geodesic { Scheme::Geodesic } else { Scheme::Projection };
            let t = ConvergenceTable::new(scheme, order, records);
            let other = ConvergenceTable::new(Scheme::Projection, order + 1, vec![ErrorRecord::new(0, 1.0, 2.0)]);
            let tables = vec![t, other];
            prop_assert_eq!(tables_from_csv(&tables_to_csv(&tables)).unwrap(), tables);
        }
    }
}
