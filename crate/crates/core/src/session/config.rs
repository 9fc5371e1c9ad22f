use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iml::MapperConfig;
use crate::synth::{DEFAULT_LATENT_ADDRESS, SUPPORTED_SAMPLE_RATES};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Internal,
    Osc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OscOutConfig {
    pub host: String,
    pub port: u16,
    pub address: String,
}

impl Default for OscOutConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 9000,
            address: DEFAULT_LATENT_ADDRESS.into(),
        }
    }
}

/// Engine configuration file. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub sample_rate: u32,
    pub ws_port: u16,
    pub osc_in_port: u16,
    pub osc_out: OscOutConfig,
    pub backend: BackendKind,
    pub mapper: MapperConfig,
    pub encoder_checkpoint: Option<PathBuf>,
    pub dataset_path: Option<PathBuf>,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            sample_rate: 48_000,
            ws_port: 8765,
            osc_in_port: 9001,
            osc_out: OscOutConfig::default(),
            backend: BackendKind::Internal,
            mapper: MapperConfig::default(),
            encoder_checkpoint: None,
            dataset_path: None,
            seed: 42,
        }
    }
}

impl SessionConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !SUPPORTED_SAMPLE_RATES.contains(&self.sample_rate) {
            return Err(ConfigError::Invalid(format!(
                "sample_rate {} not one of {:?}",
                self.sample_rate, SUPPORTED_SAMPLE_RATES
            )));
        }
        crate::osc::validate_address(&self.osc_out.address)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}
