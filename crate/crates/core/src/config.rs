//! Run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dst::Carriage;
use crate::llm::GatewayConfig;
use crate::metrics::{ClassRules, JgaMode, SlotUniverse};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Metric settings that do not depend on the run being scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct EvaluationConfig {
    pub jga_mode: JgaMode,
    pub slot_universe: SlotUniverse,
    /// Slot-class accuracies; off unless enabled here or on the command line.
    pub classes: bool,
    pub class_rules: ClassRules,
}

impl EvaluationConfig {
    pub fn options(&self, variant: crate::dst::Variant) -> crate::metrics::EvalOptions {
        crate::metrics::EvalOptions {
            jga_mode: self.jga_mode,
            slot_universe: self.slot_universe,
            variant,
            classes: self.classes,
            class_rules: self.class_rules.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Dialogues processed concurrently.
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Directory of prompt templates; the bundled set when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompts_dir: Option<PathBuf>,
    pub carriage: Carriage,
    pub gateway: GatewayConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: 4,
            cache_dir: None,
            prompts_dir: None,
            carriage: Carriage::default(),
            gateway: GatewayConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }
}
