//! JSON scenario configuration and the built-in presets.
//!
//! ```json
//! {
//!   "name": "fig2",
//!   "model": { "kind": "erasure", "eps0": 0.4, "eps_tau": 10, "tau": 10, "gamma": 0.2, "bath_beta": 1 },
//!   "initial_state": { "kind": "gibbs_at", "beta": 1 },
//!   "integrator": { "dt": 0.0005, "t_end": 10, "n_samples": 401 },
//!   "bath_temperature": 1,
//!   "beta_branch": "non_negative",
//!   "outputs": { "plots": true },
//!   "sweep": [ { "label": "tau_5", "model": { "tau": 5 } } ]
//! }
//! ```
//!
//! Every field except `model.kind` has a default. Sweep entries are deep-merged
//! over the base document; each runs into its own subdirectory.

use std::path::{Path, PathBuf};

use landauer_core::models::{ErasureParams, InitialState, RydbergParams};
use landauer_core::{Branch, Complex64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub initial_state: Option<InitialStateConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub bath_temperature: Option<f64>,
    #[serde(default)]
    pub beta_branch: BranchConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub sweep: Vec<Value>,
}

fn default_name() -> String {
    "custom".into()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Rydberg(RydbergConfig),
    Erasure(ErasureConfig),
    /// Undriven model read from a JSON matrix file (see [`crate::custom`]).
    Custom {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RydbergConfig {
    pub omega2: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl Default for RydbergConfig {
    fn default() -> Self {
        let p = RydbergParams::default();
        Self {
            omega2: p.omega2,
            omega: p.omega,
            gamma: p.gamma,
        }
    }
}

impl From<RydbergConfig> for RydbergParams {
    fn from(c: RydbergConfig) -> Self {
        Self {
            omega2: c.omega2,
            omega: c.omega,
            gamma: c.gamma,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ErasureConfig {
    pub eps0: f64,
    pub eps_tau: f64,
    pub tau: f64,
    pub gamma: f64,
    pub bath_beta: f64,
}

impl Default for ErasureConfig {
    fn default() -> Self {
        let p = ErasureParams::default();
        Self {
            eps0: p.eps0,
            eps_tau: p.eps_tau,
            tau: p.tau,
            gamma: p.gamma,
            bath_beta: p.bath_beta,
        }
    }
}

impl From<ErasureConfig> for ErasureParams {
    fn from(c: ErasureConfig) -> Self {
        Self {
            eps0: c.eps0,
            eps_tau: c.eps_tau,
            tau: c.tau,
            gamma: c.gamma,
            bath_beta: c.bath_beta,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    GibbsAt {
        beta: f64,
    },
    SortedAscendingDiagonal {
        beta: f64,
    },
    MaximallyMixed,
    /// Amplitudes as `[re, im]` pairs.
    Pure {
        amplitudes: Vec<[f64; 2]>,
    },
}

impl InitialStateConfig {
    pub fn to_core(&self) -> InitialState {
        match self {
            Self::GibbsAt { beta } => InitialState::GibbsAt { beta: *beta },
            Self::SortedAscendingDiagonal { beta } => {
                InitialState::SortedAscendingDiagonal { beta: *beta }
            }
            Self::MaximallyMixed => InitialState::MaximallyMixed,
            Self::Pure { amplitudes } => InitialState::Pure(
                amplitudes
                    .iter()
                    .map(|[r, i]| Complex64::new(*r, *i))
                    .collect(),
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub n_samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BranchConfig {
    #[default]
    NonNegative,
    Negative,
}

impl From<BranchConfig> for Branch {
    fn from(b: BranchConfig) -> Self {
        match b {
            BranchConfig::NonNegative => Branch::NonNegative,
            BranchConfig::Negative => Branch::Negative,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    pub plots: bool,
}

/// Fully resolved integrator settings.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Integration {
    pub dt: f64,
    pub t_end: f64,
    pub n_samples: usize,
}

pub const RYDBERG_DT: f64 = 0.05;
pub const RYDBERG_T_END: f64 = 5000.0;
pub const RYDBERG_SAMPLES: usize = 501;
pub const ERASURE_STEPS: f64 = 20000.0;
pub const ERASURE_SAMPLES: usize = 401;

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative custom-model path is resolved
    /// against the config file's directory.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json_str(&text)?;
        if let ModelConfig::Custom { path: p } = &mut cfg.model {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let doc = match name {
            "fig1" => serde_json::json!({
                "name": "fig1",
                "model": { "kind": "rydberg" },
                "initial_state": { "kind": "gibbs_at", "beta": 30.0 },
            }),
            "fig1_inset" => serde_json::json!({
                "name": "fig1_inset",
                "model": { "kind": "rydberg" },
                "initial_state": { "kind": "sorted_ascending_diagonal", "beta": 30.0 },
            }),
            "fig2" => serde_json::json!({
                "name": "fig2",
                "model": { "kind": "erasure" },
                "initial_state": { "kind": "gibbs_at", "beta": 1.0 },
                "bath_temperature": 1.0,
            }),
            "figS1" => serde_json::json!({
                "name": "figS1",
                "model": { "kind": "erasure" },
                "initial_state": { "kind": "gibbs_at", "beta": 1.0 },
                "bath_temperature": 1.0,
                "sweep": [
                    { "label": "tau_5", "model": { "tau": 5.0 } },
                    { "label": "tau_10", "model": { "tau": 10.0 } },
                    { "label": "tau_20", "model": { "tau": 20.0 } },
                ],
            }),
            other => {
                return Err(CliError::Config(format!(
                    "unknown scenario `{other}` (expected fig1, fig1_inset, fig2 or figS1)"
                )))
            }
        };
        let cfg: Self = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(dt) = self.integrator.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if let Some(t) = self.integrator.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("t_end must be positive, got {t}"));
            }
        }
        if let Some(n) = self.integrator.n_samples {
            if n < 2 {
                return bad(format!("n_samples must be at least 2, got {n}"));
            }
        }
        if let Some(t) = self.bath_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("bath_temperature must be positive, got {t}"));
            }
        }
        match &self.model {
            ModelConfig::Rydberg(r) => RydbergParams::from(*r)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?,
            ModelConfig::Erasure(e) => ErasureParams::from(*e)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?,
            ModelConfig::Custom { .. } => {
                if self.integrator.dt.is_none() || self.integrator.t_end.is_none() {
                    return bad("custom models need integrator.dt and integrator.t_end".into());
                }
            }
        }
        for entry in &self.sweep {
            if !entry.is_object() {
                return bad("sweep entries must be JSON objects".into());
            }
        }
        Ok(())
    }

    /// One config per sweep entry (labelled), or just this one.
    pub fn expand(&self) -> Result<Vec<(Option<String>, ScenarioConfig)>, CliError> {
        if self.sweep.is_empty() {
            return Ok(vec![(None, self.clone())]);
        }
        let mut base = serde_json::to_value(self).map_err(|e| CliError::Config(e.to_string()))?;
        base.as_object_mut().expect("object").remove("sweep");
        self.sweep
            .iter()
            .enumerate()
            .map(|(k, entry)| {
                let mut overrides = entry.clone();
                let label = overrides
                    .as_object_mut()
                    .and_then(|o| o.remove("label"))
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_else(|| format!("sweep_{k}"));
                if label.is_empty() || label.contains(['/', '\\']) || label.starts_with('.') {
                    return Err(CliError::Config(format!("bad sweep label `{label}`")));
                }
                let mut doc = base.clone();
                merge(&mut doc, &overrides);
                let mut cfg: ScenarioConfig =
                    serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
                cfg.name = format!("{}/{label}", self.name);
                cfg.validate()?;
                Ok((Some(label), cfg))
            })
            .collect()
    }

    pub fn initial_state_or_default(&self) -> InitialStateConfig {
        if let Some(s) = &self.initial_state {
            return s.clone();
        }
        match &self.model {
            ModelConfig::Rydberg(_) => InitialStateConfig::GibbsAt { beta: 30.0 },
            ModelConfig::Erasure(e) => InitialStateConfig::GibbsAt { beta: e.bath_beta },
            ModelConfig::Custom { .. } => InitialStateConfig::MaximallyMixed,
        }
    }

    pub fn integration(&self) -> Integration {
        let i = &self.integrator;
        let (dt, t_end, n) = match &self.model {
            ModelConfig::Rydberg(_) => (RYDBERG_DT, RYDBERG_T_END, RYDBERG_SAMPLES),
            ModelConfig::Erasure(e) => (e.tau / ERASURE_STEPS, e.tau, ERASURE_SAMPLES),
            ModelConfig::Custom { .. } => (f64::NAN, f64::NAN, 201),
        };
        Integration {
            dt: i.dt.unwrap_or(dt),
            t_end: i.t_end.unwrap_or(t_end),
            n_samples: i.n_samples.unwrap_or(n),
        }
    }
}

/// Recursive object merge; non-object values in `patch` replace.
fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in ["fig1", "fig1_inset", "fig2", "figS1"] {
            ScenarioConfig::preset(name).unwrap();
        }
        assert!(matches!(
            ScenarioConfig::preset("fig3"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn erasure_defaults_scale_with_tau() {
        let cfg =
            ScenarioConfig::from_json_str(r#"{"model": {"kind": "erasure", "tau": 5}}"#).unwrap();
        let i = cfg.integration();
        assert_eq!(i.t_end, 5.0);
        assert_eq!(i.dt, 5.0 / 20000.0);
        assert_eq!(
            cfg.initial_state_or_default(),
            InitialStateConfig::GibbsAt { beta: 1.0 }
        );
    }

    #[test]
    fn sweep_merges_overrides() {
        let cfg = ScenarioConfig::preset("figS1").unwrap();
        let jobs = cfg.expand().unwrap();
        assert_eq!(jobs.len(), 3);
        let taus: Vec<f64> = jobs
            .iter()
            .map(|(_, c)| match &c.model {
                ModelConfig::Erasure(e) => e.tau,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(taus, vec![5.0, 10.0, 20.0]);
        assert_eq!(jobs[0].0.as_deref(), Some("tau_5"));
        assert_eq!(jobs[0].1.bath_temperature, Some(1.0));
        assert!(jobs[0].1.sweep.is_empty());
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for text in [
            r#"{"model": {"kind": "rydberg"}, "integrator": {"dt": -1}}"#,
            r#"{"model": {"kind": "rydberg"}, "integrator": {"n_samples": 1}}"#,
            r#"{"model": {"kind": "erasure", "tau": 0}}"#,
            r#"{"model": {"kind": "heat_engine"}}"#,
            r#"{"model": {"kind": "rydberg"}, "colour": "blue"}"#,
            r#"{"model": {"kind": "custom", "path": "h.json"}}"#,
            r#"not json"#,
        ] {
            assert!(
                matches!(
                    ScenarioConfig::from_json_str(text),
                    Err(CliError::Config(_))
                ),
                "{text}"
            );
        }
    }
}
