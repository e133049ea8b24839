use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{CorpusError, IngestReport, PipelineMeta};
use crate::model::{Dialogue, DialogueState, Domain, Turn};
use crate::util::write_atomic;

#[derive(Serialize, Deserialize)]
struct ExtendedEntry {
    id: String,
    domains: BTreeSet<Domain>,
    turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pipeline_meta: Option<PipelineMeta>,
}

pub(super) fn parse_dialogue(
    key: &str,
    entry: &Value,
    report: &mut IngestReport,
) -> Result<Option<Dialogue>, CorpusError> {
    let parsed: ExtendedEntry = serde_json::from_value(entry.clone())
        .map_err(|e| CorpusError::format(key, format!("$.{key}"), e.to_string()))?;
    if parsed.id != key {
        return Err(CorpusError::format(
            key,
            format!("$.{key}.id"),
            format!("id `{}` does not match its key", parsed.id),
        ));
    }
    // Cumulative states are recomputed from the deltas and must agree with
    // the stored ones.
    let mut running = DialogueState::new();
    for (i, turn) in parsed.turns.iter().enumerate() {
        running = running.update(&turn.gold_delta);
        if running != turn.gold_cumulative {
            return Err(CorpusError::format(
                key,
                format!("$.{key}.turns[{i}].gold_cumulative"),
                "stored cumulative state disagrees with accumulated deltas",
            ));
        }
    }
    if report.pipeline_meta.is_none() {
        report.pipeline_meta = parsed.pipeline_meta.clone();
    }
    let dialogue = Dialogue {
        id: parsed.id,
        domains: parsed.domains,
        turns: parsed.turns,
    };
    dialogue
        .validate()
        .map_err(|e| CorpusError::format(key, format!("$.{key}"), e.to_string()))?;
    Ok(Some(dialogue))
}

/// Renders dialogues in the extended format: pretty JSON, keys sorted,
/// trailing newline. Equal input gives byte-identical output.
pub fn to_extended_json(dialogues: &[Dialogue], meta: &PipelineMeta) -> io::Result<String> {
    let mut root = Map::new();
    for d in dialogues {
        let entry = ExtendedEntry {
            id: d.id.clone(),
            domains: d.domains.clone(),
            turns: d.turns.clone(),
            pipeline_meta: Some(meta.clone()),
        };
        let value = serde_json::to_value(&entry).map_err(io::Error::other)?;
        if root.insert(d.id.clone(), value).is_some() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("duplicate dialogue id `{}`", d.id),
            ));
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).map_err(io::Error::other)?;
    text.push('\n');
    Ok(text)
}

pub fn save_extended(dialogues: &[Dialogue], meta: &PipelineMeta, path: &Path) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = to_extended_json(dialogues, meta).map_err(io_err)?;
    write_atomic(path, text.as_bytes()).map_err(io_err)
}
