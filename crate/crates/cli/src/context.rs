use std::path::Path;
use std::sync::Arc;

use anyhow::Context as _;
use duetwoz_core::corpus::{load_corpus, CorpusFile};
use duetwoz_core::llm::{MockProvider, MockScript};
use duetwoz_core::pipeline::PromptTemplates;
use duetwoz_core::{Dialogue, Gateway, RunConfig};

use crate::args::GlobalArgs;

/// Invalid invocation detected after argument parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

impl UsageError {
    pub fn new(message: impl Into<String>) -> UsageError {
        UsageError(message.into())
    }
}

/// Settings shared by every command: the run configuration with command-line
/// overrides applied, plus the optional mock script.
#[derive(Debug)]
pub struct Context {
    pub config: RunConfig,
    pub mock_script: Option<MockScript>,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> anyhow::Result<Context> {
        let mut config = match &global.config {
            Some(path) => RunConfig::load(path).map_err(|e| UsageError::new(e.to_string()))?,
            None => RunConfig::default(),
        };
        if let Some(seed) = global.seed {
            config.seed = seed;
        }
        if let Some(dir) = &global.cache_dir {
            config.cache_dir = Some(dir.clone());
        }
        let mock_script = match &global.mock_script {
            Some(path) => Some(
                MockScript::load(path).map_err(|e| UsageError::new(format!("mock script {}: {e}", path.display())))?,
            ),
            None => None,
        };
        Ok(Context { config, mock_script })
    }

    pub fn templates(&self) -> anyhow::Result<PromptTemplates> {
        match &self.config.prompts_dir {
            Some(dir) => {
                PromptTemplates::load_dir(dir).with_context(|| format!("prompt templates in {}", dir.display()))
            }
            None => Ok(PromptTemplates::builtin().clone()),
        }
    }

    pub fn gateway(&self, prompt_version: &str) -> anyhow::Result<Gateway> {
        let mut builder = Gateway::from_config(&self.config.gateway, self.config.cache_dir.clone(), prompt_version);
        if let Some(script) = &self.mock_script {
            builder = builder.force_mock(Arc::new(MockProvider::new(script.clone())));
        }
        Ok(builder.build()?)
    }

    pub fn workers(&self, flag: Option<usize>) -> usize {
        flag.unwrap_or(self.config.workers).max(1)
    }
}

/// Loads a corpus in either format, logging what ingest skipped.
pub fn read_corpus(path: &Path) -> anyhow::Result<Vec<Dialogue>> {
    let file = CorpusFile::detect(path).with_context(|| format!("reading corpus {}", path.display()))?;
    let (dialogues, report) = load_corpus(&file, None).with_context(|| format!("loading corpus {}", path.display()))?;
    if !report.dialogues_skipped.is_empty() {
        log::info!(
            "{}: skipped {} dialogues",
            path.display(),
            report.dialogues_skipped.len()
        );
    }
    for w in &report.warnings {
        log::debug!("{}: {}", w.dialogue_id, w.message);
    }
    Ok(dialogues)
}
