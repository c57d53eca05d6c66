use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{CriteriaError, ScoringConstants};
use crate::ranker::Weights;

pub const DEFAULT_RANKING_SIZE: usize = 25;
pub const DEFAULT_MAX_SET_SIZE: usize = 3;
pub const MIN_SET_SIZE: usize = 2;
pub const MAX_SET_SIZE_LIMIT: usize = 4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error(transparent)]
    Constants(#[from] CriteriaError),
}

/// Every tunable parameter of a recommendation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommenderConfig {
    pub weights: Weights,
    pub constants: ScoringConstants,
    pub ranking_size: usize,
    pub max_set_size: usize,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            constants: ScoringConstants::default(),
            ranking_size: DEFAULT_RANKING_SIZE,
            max_set_size: DEFAULT_MAX_SET_SIZE,
        }
    }
}

impl RecommenderConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.constants.validate()?;
        if self.ranking_size == 0 {
            return Err(ConfigError::Parse("ranking_size must be positive".into()));
        }
        Ok(())
    }
}

/// Clamps a requested set size into the supported range.
pub fn clamp_set_size(requested: usize) -> usize {
    requested.clamp(MIN_SET_SIZE, MAX_SET_SIZE_LIMIT)
}
