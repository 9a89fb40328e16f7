//! Run configuration: a JSON file validated before any computation, with
//! command-line flags applied on top.

use crate::error::{Error, Result};
use crate::gr_poly::AlphaParams;
use crate::hierarchy::{BoundaryParams, HamiltonianSpec};
use crate::qcore::{NumericPolicy, C64};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Tagged parameter records; each suite picks the kinds it understands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamRecord {
    Alpha { alphas: Vec<C64>, q: C64 },
    Module { spins: Vec<f64>, beta: C64, beta_star: C64, q: C64 },
    Boundary { omega0: C64, omega1: C64, g_plus: C64, g_minus: C64 },
    Hamiltonian { h0: C64, h_minus1: C64, offset: C64 },
    Krawtchouk { alphas: Vec<f64>, m: f64 },
    Racah { zeta: Vec<f64>, m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Samples {
    /// Random points per (N, q, k, n) in the bispectral suite.
    pub points: usize,
    /// Largest total degree in the bispectral and ladder suites.
    pub max_total: usize,
    /// Random (n, alpha) draws for the coefficient comparisons.
    pub coefficient_draws: usize,
    pub duality_draws: usize,
    pub ladder_points: usize,
    /// Largest total degree in the ladder suite.
    pub ladder_max_total: usize,
    pub ortho_nodes_n1: usize,
    /// Nodes per variable for N = 2; 0 skips the two-variable Gram check.
    pub ortho_nodes_n2: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples {
            points: 20,
            max_total: 4,
            coefficient_draws: 50,
            duality_draws: 100,
            ladder_points: 2,
            ladder_max_total: 3,
            ortho_nodes_n1: 2000,
            ortho_nodes_n2: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    /// Omit wall times so that repeated runs are byte-identical.
    pub timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("qonsager-out"), csv: true, timing: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Suites run by `all`; absent means every suite.
    pub suites: Option<Vec<String>>,
    pub policy: NumericPolicy,
    pub workers: Option<usize>,
    pub params: Vec<ParamRecord>,
    pub samples: Samples,
    pub output: OutputConfig,
    /// Threshold overrides for relative and absolute residual checks.
    pub tol_rel: Option<f64>,
    pub tol_abs: Option<f64>,
}


impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Every record is checked by building the object it describes.
    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        for (name, v) in [("tol_rel", self.tol_rel), ("tol_abs", self.tol_abs)] {
            if let Some(t) = v {
                if !(t > 0.0) || !t.is_finite() {
                    return Err(Error::Config(format!("{name} must be positive, got {t}")));
                }
            }
        }
        if self.samples.points == 0 || self.samples.ortho_nodes_n1 == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        for p in &self.params {
            match p {
                ParamRecord::Alpha { alphas, q } => {
                    AlphaParams::with_policy(alphas.clone(), *q, self.policy)?;
                }
                ParamRecord::Module { spins, beta, beta_star, q } => {
                    crate::onsager_modules::ModuleSpec::with_policy(spins.clone(), *beta, *beta_star, *q, self.policy)?;
                }
                ParamRecord::Boundary { .. } => {
                    self.boundary_from(p).unwrap().validate()?;
                }
                ParamRecord::Hamiltonian { .. } => {}
                ParamRecord::Krawtchouk { alphas, m } => {
                    crate::classical_q1::KrawtchoukParams::new(alphas.clone(), *m)?;
                }
                ParamRecord::Racah { zeta, m } => {
                    crate::classical_q1::RacahParams::new(zeta.clone(), *m)?;
                }
            }
        }
        Ok(())
    }

    fn boundary_from(&self, p: &ParamRecord) -> Option<BoundaryParams> {
        match *p {
            ParamRecord::Boundary { omega0, omega1, g_plus, g_minus } => {
                Some(BoundaryParams { omega0, omega1, g_plus, g_minus })
            }
            _ => None,
        }
    }

    pub fn boundary(&self) -> Option<BoundaryParams> {
        self.params.iter().find_map(|p| self.boundary_from(p))
    }

    pub fn hamiltonian(&self) -> Option<HamiltonianSpec> {
        self.params.iter().find_map(|p| match *p {
            ParamRecord::Hamiltonian { h0, h_minus1, offset } => Some(HamiltonianSpec { h0, h_minus1, offset }),
            _ => None,
        })
    }

    pub fn modules(&self) -> Vec<(Vec<f64>, C64, C64, C64)> {
        self.params
            .iter()
            .filter_map(|p| match p {
                ParamRecord::Module { spins, beta, beta_star, q } => Some((spins.clone(), *beta, *beta_star, *q)),
                _ => None,
            })
            .collect()
    }

    pub fn alphas(&self) -> Vec<AlphaParams> {
        self.params
            .iter()
            .filter_map(|p| match p {
                ParamRecord::Alpha { alphas, q } => AlphaParams::with_policy(alphas.clone(), *q, self.policy).ok(),
                _ => None,
            })
            .collect()
    }

    pub fn krawtchouk(&self) -> Vec<(Vec<f64>, f64)> {
        self.params
            .iter()
            .filter_map(|p| match p {
                ParamRecord::Krawtchouk { alphas, m } => Some((alphas.clone(), *m)),
                _ => None,
            })
            .collect()
    }

    pub fn racah(&self) -> Vec<(Vec<f64>, usize)> {
        self.params
            .iter()
            .filter_map(|p| match p {
                ParamRecord::Racah { zeta, m } => Some((zeta.clone(), *m)),
                _ => None,
            })
            .collect()
    }

    /// Threshold for a relative check, honoring the override.
    pub fn rel(&self, pinned: f64) -> f64 {
        self.tol_rel.unwrap_or(pinned)
    }

    /// Threshold for an absolute check, honoring the override.
    pub fn abs(&self, pinned: f64) -> f64 {
        self.tol_abs.unwrap_or(pinned)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"sed": 3}"#), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"samples": {"pts": 3}}"#).is_err());
        let bad = r#"{"params": [{"kind": "racah", "zeta": [0.3, 1.7, 2.9], "m": 5, "extra": 1}]}"#;
        assert!(RunConfig::from_json(bad).is_err());
    }

    #[test]
    fn records_parse_and_validate() {
        let text = r#"{
            "params": [
                {"kind": "module", "spins": [1.0, 0.5], "beta": [0.3, 0.2], "beta_star": [0.7, -0.1], "q": [0.7, 0.0]},
                {"kind": "boundary", "omega0": [1, 0], "omega1": [0.5, 0], "g_plus": [0, 0], "g_minus": [0.2, 0]},
                {"kind": "krawtchouk", "alphas": [0.1, 0.2], "m": 4}
            ],
            "policy": {"rel_tol": 1e-9}
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        assert_eq!(c.modules().len(), 1);
        assert_eq!(c.boundary().unwrap().omega1, C64::new(0.5, 0.0));
        assert_eq!(c.policy.rel_tol, 1e-9);
        assert_eq!(c.policy.abs_tol, NumericPolicy::default().abs_tol);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_json(r#"{"params": [{"kind": "module", "spins": [0.7], "beta": [0, 0], "beta_star": [0, 0], "q": [0.7, 0]}]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"workers": 0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tol_rel": -1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"policy": {"abs_tol": 0}}"#).is_err());
    }
}
