//! TOML run configuration: training hyperparameters plus suite selection
//! (which PDEs, which models, which seeds). Every field has a default, so a
//! partial file only overrides what it names.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::nn::TrainConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub suite: SuiteConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// PDE ids to run; empty means the full registry.
    pub pdes: Vec<String>,
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
    /// Record wall time per run. Off by default: timing columns vary between
    /// machines and would break byte-for-byte CSV reproducibility.
    pub timed: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            suite: SuiteConfig::default(),
        }
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            pdes: Vec::new(),
            models: ModelKind::ALL.to_vec(),
            seeds: vec![0, 1, 2, 3, 4],
            timed: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.suite.models.is_empty() {
            return Err(Error::InvalidConfig("suite.models must not be empty".into()));
        }
        if self.suite.seeds.is_empty() {
            return Err(Error::InvalidConfig("suite.seeds must not be empty".into()));
        }
        for id in &self.suite.pdes {
            crate::pinn::get_problem(id)?;
        }
        Ok(())
    }
}
