//! Reading MultiWOZ 2.1 corpora and reading/writing the extended corpus
//! format that carries second-user utterances.
//!
//! Both formats are a JSON object keyed by dialogue id. MultiWOZ entries
//! hold a `log` of alternating user/system turns whose system entries carry
//! the cumulative belief state in `metadata`; extended entries hold
//! `turns` with explicit gold deltas and cumulative states.

mod extended;
mod multiwoz;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{Dialogue, Domain};

pub use extended::{save_extended, to_extended_json};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error in dialogue `{dialogue}` at {json_path}: {message}")]
    Format {
        dialogue: String,
        json_path: String,
        message: String,
    },
}

impl CorpusError {
    pub(crate) fn format(dialogue: &str, json_path: impl Into<String>, message: impl Into<String>) -> CorpusError {
        CorpusError::Format {
            dialogue: dialogue.to_string(),
            json_path: json_path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    Multiwoz21,
    DuetwozExtended,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub path: PathBuf,
    pub format: CorpusFormat,
}

impl CorpusFile {
    pub fn new(path: impl Into<PathBuf>, format: CorpusFormat) -> CorpusFile {
        CorpusFile {
            path: path.into(),
            format,
        }
    }

    /// Sniffs the format from the first entry: a `log` key means MultiWOZ,
    /// otherwise extended. An empty object is read as extended.
    pub fn detect(path: impl Into<PathBuf>) -> Result<CorpusFile, CorpusError> {
        let path = path.into();
        let root = read_json(&path)?;
        let format = match root.as_object().and_then(|m| m.values().next()) {
            Some(first) if first.get("log").is_some() => CorpusFormat::Multiwoz21,
            _ => CorpusFormat::DuetwozExtended,
        };
        Ok(CorpusFile { path, format })
    }
}

/// Provenance stored with every extended dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineMeta {
    pub generator_model: String,
    pub generated_at: String,
    pub prompt_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDialogue {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    pub dialogue_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source_dialogues: usize,
    pub dialogues_read: usize,
    pub dialogues_skipped: Vec<SkippedDialogue>,
    /// turns per dialogue -> number of dialogues
    pub turn_count_histogram: BTreeMap<usize, usize>,
    pub warnings: Vec<IngestWarning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_meta: Option<PipelineMeta>,
}

impl IngestReport {
    pub fn total_turns(&self) -> usize {
        self.turn_count_histogram.iter().map(|(turns, n)| turns * n).sum()
    }

    pub fn mean_turns(&self) -> Option<f64> {
        (self.dialogues_read > 0).then(|| self.total_turns() as f64 / self.dialogues_read as f64)
    }

    fn skip(&mut self, id: &str, reason: impl Into<String>) {
        self.dialogues_skipped.push(SkippedDialogue {
            id: id.to_string(),
            reason: reason.into(),
        });
    }

    pub(crate) fn warn(&mut self, id: &str, message: impl Into<String>) {
        self.warnings.push(IngestWarning {
            dialogue_id: id.to_string(),
            message: message.into(),
        });
    }
}

pub(crate) fn read_json(path: &Path) -> Result<Value, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::format("", "$", format!("invalid JSON: {e}")))
}

/// Loads a corpus, returning dialogues sorted by id.
///
/// Dialogues without any of the five evaluated domains, or without any
/// domain in `domain_filter` when one is given, are skipped and listed in
/// the report.
pub fn load_corpus(
    file: &CorpusFile,
    domain_filter: Option<&BTreeSet<Domain>>,
) -> Result<(Vec<Dialogue>, IngestReport), CorpusError> {
    let root = read_json(&file.path)?;
    load_corpus_value(&root, file.format, domain_filter)
}

pub fn load_corpus_value(
    root: &Value,
    format: CorpusFormat,
    domain_filter: Option<&BTreeSet<Domain>>,
) -> Result<(Vec<Dialogue>, IngestReport), CorpusError> {
    let object = root
        .as_object()
        .ok_or_else(|| CorpusError::format("", "$", "top level must be an object keyed by dialogue id"))?;
    let mut ids: Vec<&String> = object.keys().collect();
    ids.sort();

    let mut report = IngestReport {
        source_dialogues: ids.len(),
        ..IngestReport::default()
    };
    let mut dialogues = Vec::new();
    for id in ids {
        let entry = &object[id];
        let parsed = match format {
            CorpusFormat::Multiwoz21 => multiwoz::parse_dialogue(id, entry, &mut report)?,
            CorpusFormat::DuetwozExtended => extended::parse_dialogue(id, entry, &mut report)?,
        };
        let Some(dialogue) = parsed else { continue };
        if let Some(filter) = domain_filter {
            if dialogue.domains.is_disjoint(filter) {
                report.skip(id, "no domain in filter");
                continue;
            }
        }
        *report.turn_count_histogram.entry(dialogue.turns.len()).or_default() += 1;
        dialogues.push(dialogue);
    }
    report.dialogues_read = dialogues.len();
    Ok((dialogues, report))
}
