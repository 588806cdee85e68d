//! TOML run configuration: which backend, and per-role models and sampling.
//!
//! ```toml
//! backend = "ollama"          # or "scripted"
//! endpoint = "http://localhost:11434"
//! model = "qwen2.5:7b"
//! temperature = 0.8
//! top_p = 0.6
//! max_retries = 3
//! max_intents = 10
//!
//! [roles.summary]
//! model = "qwen2.5:0.5b"
//! ```
//!
//! Top-level `model`, `temperature`, `top_p` and `endpoint` apply to every
//! role unless a `[roles.<role>]` table overrides them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use freyr_core::{GenerationOptions, PipelineConfig, Role};
use serde::{Deserialize, Serialize};

use crate::ollama::default_endpoint;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("BAD_CONFIG: cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("BAD_CONFIG: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("BAD_CONFIG: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Ollama,
    Scripted,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleOverride {
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreyrConfig {
    pub backend: BackendKind,
    /// Reply script for the scripted backend.
    pub script: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_retries: u32,
    pub max_intents: usize,
    pub roles: BTreeMap<Role, RoleOverride>,
}

impl Default for FreyrConfig {
    fn default() -> Self {
        let o = GenerationOptions::default();
        let p = PipelineConfig::default();
        Self {
            backend: BackendKind::Ollama,
            script: None,
            endpoint: None,
            model: o.model,
            temperature: o.temperature,
            top_p: o.top_p,
            max_retries: p.max_retries,
            max_intents: p.max_intents,
            roles: BTreeMap::new(),
        }
    }
}

impl FreyrConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: FreyrConfig = toml::from_str(text)?;
        cfg.pipeline()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        // A relative script path is relative to the config file.
        if let (Some(script), Some(dir)) = (&cfg.script, path.parent()) {
            if script.is_relative() {
                cfg.script = Some(dir.join(script));
            }
        }
        Ok(cfg)
    }

    /// Resolves the per-role settings. An unset endpoint falls back to
    /// `$FREYR_ENDPOINT`, then to the local Ollama default.
    pub fn pipeline(&self) -> Result<PipelineConfig, ConfigError> {
        let endpoint = self.endpoint.clone().unwrap_or_else(default_endpoint);
        let base = GenerationOptions {
            model: self.model.clone(),
            temperature: self.temperature,
            top_p: self.top_p,
        };
        let mut cfg = PipelineConfig::uniform(base, &endpoint);
        cfg.max_retries = self.max_retries;
        cfg.max_intents = self.max_intents;
        for (role, o) in &self.roles {
            let rc = cfg.role_mut(*role);
            if let Some(m) = &o.model {
                rc.options.model = m.clone();
            }
            if let Some(e) = &o.endpoint {
                rc.endpoint = e.clone();
            }
            if let Some(t) = o.temperature {
                rc.options.temperature = t;
            }
            if let Some(p) = o.top_p {
                rc.options.top_p = p;
            }
        }
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }
}
