use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fe_basis::{MAX_ORDER, MAX_QUADRATURE_DEGREE};
use crate::interpolation::Scheme;
use crate::norms::DEFAULT_QUAD_DEGREE;

pub const MAX_STUDY_LEVEL: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Interpolation,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Sphere,
    So3,
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interpolation" | "interp" => Ok(StudyKind::Interpolation),
            "harmonic" => Ok(StudyKind::Harmonic),
            _ => Err(Error::InvalidConfig(format!("unknown study `{s}`"))),
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyKind::Interpolation => "interpolation",
            StudyKind::Harmonic => "harmonic",
        })
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" | "s2" => Ok(ManifoldKind::Sphere),
            "so3" => Ok(ManifoldKind::So3),
            _ => Err(Error::InvalidConfig(format!("unknown manifold `{s}`"))),
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ManifoldKind::Sphere => "sphere",
            ManifoldKind::So3 => "so3",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub study: StudyKind,
    pub manifold: ManifoldKind,
    pub scheme: Scheme,
    pub orders: Vec<usize>,
    /// Finest level; `None` picks the per-study default.
    pub max_level: Option<usize>,
    pub quad_degree: usize,
    /// CSV destination; standard output when `None`.
    pub out: Option<PathBuf>,
    pub verbose: bool,
}

impl StudyConfig {
    pub fn new(study: StudyKind, manifold: ManifoldKind) -> Self {
        StudyConfig {
            study,
            manifold,
            scheme: Scheme::Projection,
            orders: vec![1, 2, 3],
            max_level: None,
            quad_degree: DEFAULT_QUAD_DEGREE,
            out: None,
            verbose: false,
        }
    }

    /// 6 for interpolation, 4 for harmonic maps into the sphere and 3 for
    /// harmonic maps into SO(3), unless set explicitly.
    pub fn effective_max_level(&self) -> usize {
        self.max_level.unwrap_or(match (self.study, self.manifold) {
            (StudyKind::Interpolation, _) => 6,
            (StudyKind::Harmonic, ManifoldKind::Sphere) => 4,
            (StudyKind::Harmonic, ManifoldKind::So3) => 3,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(Error::InvalidConfig("at least one order is required".into()));
        }
        if let Some(r) = self.orders.iter().find(|r| **r == 0 || **r > MAX_ORDER) {
            return Err(Error::InvalidConfig(format!("order {r} is not in 1..={MAX_ORDER}")));
        }
        let mut sorted = self.orders.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.orders.len() {
            return Err(Error::InvalidConfig("orders must not repeat".into()));
        }
        if self.effective_max_level() > MAX_STUDY_LEVEL {
            return Err(Error::InvalidConfig(format!(
                "levels {} exceeds the maximum of {MAX_STUDY_LEVEL}",
                self.effective_max_level()
            )));
        }
        if self.quad_degree == 0 || self.quad_degree > MAX_QUADRATURE_DEGREE {
            return Err(Error::InvalidConfig(format!(
                "quadrature degree {} is not in 1..={MAX_QUADRATURE_DEGREE}",
                self.quad_degree
            )));
        }
        if self.study == StudyKind::Harmonic && self.scheme != Scheme::Projection {
            return Err(Error::InvalidConfig("harmonic studies need the projection scheme".into()));
        }
        Ok(())
    }

    /// Parses a comma separated order list such as `1,2,3`.
    pub fn parse_orders(s: &str) -> Result<Vec<usize>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| Error::InvalidConfig(format!("bad order `{t}`"))))
            .collect()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidConfig(format!("bad {what} `{value}`"));
        match key {
            "study" => self.study = value.parse()?,
            "manifold" => self.manifold = value.parse()?,
            "scheme" => self.scheme = value.parse().map_err(|_| bad("scheme"))?,
            "orders" => self.orders = Self::parse_orders(value)?,
            "levels" | "max_level" => self.max_level = Some(value.parse().map_err(|_| bad("level count"))?),
            "quad_degree" => self.quad_degree = value.parse().map_err(|_| bad("quadrature degree"))?,
            "out" => self.out = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "verbose" => {
                self.verbose = match value {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => return Err(bad("flag")),
                }
            }
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Reads the flat `key = value` format. `#` starts a comment; `study`
    /// and `manifold` are required, everything else has defaults.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let study = get("study").ok_or_else(|| Error::InvalidConfig("missing key `study`".into()))?;
        let manifold = get("manifold").ok_or_else(|| Error::InvalidConfig("missing key `manifold`".into()))?;
        let mut cfg = StudyConfig::new(study.parse()?, manifold.parse()?);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = StudyConfig::new(StudyKind::Interpolation, ManifoldKind::Sphere);
        assert_eq!(c.effective_max_level(), 6);
        assert!(c.validate().is_ok());
        assert_eq!(StudyConfig::new(StudyKind::Harmonic, ManifoldKind::Sphere).effective_max_level(), 4);
        assert_eq!(StudyConfig::new(StudyKind::Harmonic, ManifoldKind::So3).effective_max_level(), 3);

        let mut c2 = c.clone();
        c2.orders.clear();
        assert!(c2.validate().is_err());
        let mut c2 = c.clone();
        c2.max_level = Some(9);
        assert!(c2.validate().is_err());
        let mut c2 = c.clone();
        c2.orders = vec![4];
        assert!(c2.validate().is_err());
        let mut c2 = c.clone();
        c2.quad_degree = 9;
        assert!(c2.validate().is_err());
        let mut c2 = StudyConfig::new(StudyKind::Harmonic, ManifoldKind::Sphere);
        c2.scheme = Scheme::Geodesic;
        assert!(c2.validate().is_err());
    }

    #[test]
    fn key_value_format() {
        let text = "# study file\nstudy = harmonic\nmanifold=so3\norders = 1, 2 # two orders\nlevels = 2\nquad_degree = 8\nout = t.csv\nverbose = true\n";
        let c = StudyConfig::from_kv_text(text).unwrap();
        assert_eq!(c.study, StudyKind::Harmonic);
        assert_eq!(c.manifold, ManifoldKind::So3);
        assert_eq!(c.orders, vec![1, 2]);
        assert_eq!(c.max_level, Some(2));
        assert_eq!(c.quad_degree, 8);
        assert_eq!(c.out, Some(PathBuf::from("t.csv")));
        assert!(c.verbose);

        assert!(StudyConfig::from_kv_text("manifold = sphere\n").is_err());
        assert!(StudyConfig::from_kv_text("study = interp\nmanifold = sphere\ncolour = red\n").is_err());
        assert!(StudyConfig::from_kv_text("study = interp\nmanifold = sphere\nnonsense\n").is_err());
        assert!(StudyConfig::from_kv_text("study = interp\nmanifold = torus\n").is_err());
    }
}
