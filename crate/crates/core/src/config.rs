//! JSON run configuration shared by the CLI subcommands.
//!
//! ```json
//! {
//!   "params": {"A": 0.3, "B": 0.3, "beta": 0.8, "gamma": 0.5, "epsilon": 0.01},
//!   "drive": {"kind": "averaged_cosine", "eta": 0.01},
//!   "integrator": {"method": "adaptive_rk45", "rel_tol": 1e-8},
//!   "simulate": {"ic": {"v": 0.0, "w": -0.5}, "t_final": 500.0}
//! }
//! ```
//!
//! Every section is optional at load; a command reports the first key it
//! needs but cannot find. Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{GridSettings, SweepSpec};
use crate::integrator::IntegratorConfig;
use crate::model::{Drive, Params};

/// Params with every key optional, so the CLI can fill in the gaps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

fn required(key: &str, value: Option<f64>) -> Result<f64> {
    value.ok_or_else(|| Error::invalid(key, "missing required key"))
}

impl ParamsSection {
    /// Keys set in `other` win.
    pub fn overlay(self, other: ParamsSection) -> ParamsSection {
        ParamsSection {
            a: other.a.or(self.a),
            b: other.b.or(self.b),
            beta: other.beta.or(self.beta),
            gamma: other.gamma.or(self.gamma),
            epsilon: other.epsilon.or(self.epsilon),
        }
    }

    /// Builds validated params; a missing `epsilon` falls back to
    /// `epsilon_default` when one is given.
    pub fn resolve(&self, epsilon_default: Option<f64>) -> Result<Params> {
        Params::new(
            required("A", self.a)?,
            required("B", self.b)?,
            required("beta", self.beta)?,
            required("gamma", self.gamma)?,
            required("epsilon", self.epsilon.or(epsilon_default))?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcSection {
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic: Option<IcSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fire_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimate: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub settings: Vec<GridSettings>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Drive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular: Option<SingularSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
}

impl RunConfig {
    /// Parses and validates every section that is present.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::invalid(json_key(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        for (key, v) in [("A", p.a), ("B", p.b), ("beta", p.beta), ("gamma", p.gamma), ("epsilon", p.epsilon)] {
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::invalid(key, format!("must be > 0, got {x}")));
                }
            }
        }
        if let Some(d) = &self.drive {
            d.validate()?;
        }
        if let Some(i) = &self.integrator {
            i.validate()?;
        }
        if let Some(s) = &self.simulate {
            if let Some(t) = s.t_final {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::invalid("t_final", format!("must be > 0, got {t}")));
                }
            }
        }
        if let Some(s) = &self.singular {
            if let Some(k) = s.kappa {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::invalid("kappa", format!("must be > 0, got {k}")));
                }
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if let Some(g) = &self.grid {
            for s in &g.settings {
                s.validate()?;
            }
        }
        Ok(())
    }
}

/// Best-effort name of the key a serde error is about.
fn json_key(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `", "unknown variant `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(key) = rest.split('`').next() {
                return key.to_string();
            }
        }
    }
    "config".to_string()
}
