//! Run configuration: model data, truncations, seeds and every tolerance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QhmError, Result};
use crate::metric::SolverOptions;
use crate::params::{ModelParams, Truncation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { path: None, format: OutputFormat::Json }
    }
}

/// Settings for the state-distance computations, which run at a reduced truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub trunc: Truncation,
    pub solver: SolverOptions,
    /// How many fibers `|p| <= spread` random vector states occupy.
    pub state_spread: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            trunc: Truncation { p_max: 2, nx: 12, ny: 12, q_max: 4 },
            solver: SolverOptions::default(),
            state_spread: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub trunc: Truncation,
    pub seeds: Vec<u64>,
    /// Coefficient decay of random elements.
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_tolerances")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_decay() -> f64 {
    1.0
}

/// Every named tolerance with its default.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("domination", 1e-6),
        ("submultiplicativity", 1e-9),
        ("adjoint_norm", 1e-9),
        ("homomorphism", 1e-10),
        ("dense_oracle", 1e-8),
        ("base_translation", 1e-10),
        ("star_oracle", 1e-10),
        ("associativity", 1e-9),
        ("identity", 1e-12),
        ("trace_cyclic", 1e-9),
        ("trace_positive", 1e-10),
        ("action_invariance", 1e-9),
        ("leibniz", 1e-6),
        ("fd_order", 0.2),
        ("twist", 1e-10),
        ("tail", 1e-12),
        ("proof_step", 1e-12),
        ("radius", 1e-6),
        ("symmetry", 1e-3),
        ("triangle", 1e-2),
        ("central_average", 1e-10),
        ("torus_average", 1e-9),
        ("state_real", 1e-10),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::default(),
            trunc: Truncation::default(),
            seeds: vec![20_240_501],
            decay: default_decay(),
            tolerances: default_tolerances(),
            metric: MetricConfig::default(),
            output: OutputSpec::default(),
        }
    }
}

impl RunConfig {
    /// Checks everything before any computation runs.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.trunc.validate()?;
        self.metric.trunc.validate()?;
        self.metric.solver.validate()?;
        if self.seeds.is_empty() {
            return Err(QhmError::Config("at least one seed is required".into()));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(QhmError::Config(format!("decay must be positive, got {}", self.decay)));
        }
        for (name, v) in &self.tolerances {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(QhmError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        for name in default_tolerances().keys() {
            if !self.tolerances.contains_key(name) {
                return Err(QhmError::Config(format!("missing tolerance {name}")));
            }
        }
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .unwrap_or_else(|| panic!("unknown tolerance {name}"))
    }

    /// The first seed, from which every random draw in a run is derived.
    pub fn base_seed(&self) -> u64 {
        self.seeds[0]
    }

    /// Missing tolerances fall back to their defaults.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(s)?;
        for (k, v) in default_tolerances() {
            cfg.tolerances.entry(k).or_insert(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_and_validates() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn bad_tolerance_is_a_config_error() {
        let mut cfg = RunConfig::default();
        cfg.tolerances.insert("twist".into(), -1.0);
        assert!(matches!(cfg.validate(), Err(QhmError::Config(_))));
        let mut cfg = RunConfig::default();
        cfg.trunc.q_max = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn minimal_file_gets_default_tolerances() {
        let s = r#"{"params":{"c":1,"hbar":0.3,"mu":0.7,"nu":0.5},"trunc":{"P":6,"Nx":48,"Ny":48,"Q":24},"seeds":[1]}"#;
        let cfg = RunConfig::from_json(s).unwrap();
        assert_eq!(cfg.tol("triangle"), 1e-2);
    }
}
