use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{Component, CorruptionModel, CorruptionSpec};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub spec: CorruptionSpec,
    /// One component (the inlier law) for the list model, `k ≥ 1` for the mixture model.
    pub components: Vec<Component>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default = "yes")]
    pub trace: bool,
    #[serde(default = "yes")]
    pub metrics: bool,
    #[serde(default = "yes")]
    pub csv: bool,
}

fn yes() -> bool {
    true
}

impl Default for Emit {
    fn default() -> Self {
        Self { trace: true, metrics: true, csv: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub generation: GenerationConfig,
    pub estimator: EstimatorConfig,
    pub trials: usize,
    pub master_seed: u64,
    /// Relative paths resolve against the working directory.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit: Emit,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_slice(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != EXPERIMENT_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        let g = &self.generation;
        g.spec.validate()?;
        let first = g.components.first().ok_or_else(|| Error::InvalidConfig("no components".into()))?;
        if g.spec.model == CorruptionModel::ListDecoding && g.components.len() != 1 {
            return Err(Error::InvalidConfig("the list model takes exactly one component".into()));
        }
        for c in &g.components {
            c.params.validate()?;
            if c.params.dim() != first.params.dim() {
                return Err(Error::DimensionMismatch { expected: first.params.dim(), got: c.params.dim() });
            }
        }
        g.spec.adversary.build(first.params.dim())?;
        self.estimator.validate()
    }

    pub fn dim(&self) -> usize {
        self.generation.components[0].params.dim()
    }
}
