use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::parse::{parse_state_output, ParseStatus};
use super::prompt::{assemble_prompt, Carriage, Variant};
use super::DstError;
use crate::llm::{ChatRequest, Gateway};
use crate::model::{Dialogue, DialogueState};
use crate::util::{sha256_hex, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub dialogue_id: String,
    /// 1-based, aligned with the corpus turn index.
    pub turn_index: u32,
    pub raw_output: String,
    pub parsed_delta: DialogueState,
    pub cumulative: DialogueState,
    pub parse_status: ParseStatus,
    /// Soft gateway failure that replaced the model reply.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_path: Option<String>,
    pub corpus_sha256: String,
    pub variant: Variant,
    pub carriage: Carriage,
    pub prompt_version: String,
    pub started_at: String,
    #[serde(default)]
    pub finished_at: Option<String>,
    pub predictions_file: String,
    #[serde(default)]
    pub predictions_sha256: Option<String>,
    pub dialogues: usize,
    pub turns: usize,
    #[serde(default)]
    pub parse_status: BTreeMap<ParseStatus, usize>,
    /// Gateway calls made by this invocation, cache hits included.
    #[serde(default)]
    pub requests: u64,
}

impl RunManifest {
    fn same_run(&self, other: &RunManifest) -> bool {
        self.model == other.model
            && self.corpus_sha256 == other.corpus_sha256
            && self.variant == other.variant
            && self.carriage == other.carriage
            && self.prompt_version == other.prompt_version
    }
}

/// Sidecar manifest path for a predictions file: `<out>.manifest.json`.
pub fn manifest_path(predictions: &Path) -> PathBuf {
    let mut name = predictions.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    predictions.with_file_name(name)
}

pub struct DstRunner<'a> {
    gateway: &'a Gateway,
    preamble: &'a str,
    model: String,
    variant: Variant,
    carriage: Carriage,
}

impl<'a> DstRunner<'a> {
    pub fn new(
        gateway: &'a Gateway,
        preamble: &'a str,
        model: &str,
        variant: Variant,
        carriage: Carriage,
    ) -> DstRunner<'a> {
        DstRunner {
            gateway,
            preamble,
            model: model.to_string(),
            variant,
            carriage,
        }
    }

    /// Tracks one dialogue turn by turn.
    pub fn track_dialogue(&self, dialogue: &Dialogue, abort: &AtomicBool) -> Result<Vec<PredictionRecord>, DstError> {
        let mut records: Vec<PredictionRecord> = Vec::with_capacity(dialogue.turns.len());
        let mut replies: Vec<String> = Vec::with_capacity(dialogue.turns.len());
        let mut cumulative = DialogueState::new();
        for (i, turn) in dialogue.turns.iter().enumerate() {
            if abort.load(Ordering::SeqCst) {
                return Err(DstError::Aborted);
            }
            let messages = assemble_prompt(
                self.preamble,
                &dialogue.turns[..=i],
                self.variant,
                self.carriage,
                &replies,
            );
            let request = ChatRequest::new(&self.model, messages);
            let (raw, error) = match self.gateway.complete(&request) {
                Ok(resp) => (resp.content, None),
                Err(e) if e.is_hard() => return Err(e.into()),
                Err(e) => {
                    log::warn!("{} turn {}: {e}; recording an empty update", dialogue.id, turn.index);
                    (String::new(), Some(e.to_string()))
                }
            };
            let (delta, status) = parse_state_output(&raw);
            cumulative = cumulative.update(&delta);
            replies.push(raw.clone());
            records.push(PredictionRecord {
                dialogue_id: dialogue.id.clone(),
                turn_index: turn.index,
                raw_output: raw,
                parsed_delta: delta,
                cumulative: cumulative.clone(),
                parse_status: status,
                error,
            });
        }
        Ok(records)
    }
}

#[derive(Debug, Clone, Default)]
pub struct DstOptions {
    pub workers: usize,
    /// Recorded in the manifest; also hashed when present.
    pub corpus_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DstOutcome {
    /// Sorted by dialogue id, then turn.
    pub records: Vec<PredictionRecord>,
    pub manifest: RunManifest,
    pub resumed_dialogues: usize,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DstError + '_ {
    move |source| DstError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn now() -> String {
    let t: DateTime<Utc> = Utc::now();
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn read_lines(path: &Path, tolerate_tail: bool) -> Result<Vec<PredictionRecord>, DstError> {
    let file = File::open(path).map_err(io_err(path))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(io_err(path))?;
    let mut records = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PredictionRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) if tolerate_tail && i + 1 == lines.len() => {
                log::warn!("{}: ignoring truncated final line ({e})", path.display());
            }
            Err(e) => {
                return Err(DstError::Format {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(records)
}

/// Reads a predictions file and checks that every dialogue's records run
/// from turn 1 without gaps and accumulate consistently.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, DstError> {
    let records = read_lines(path, false)?;
    let mut grouped: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in &records {
        grouped.entry(&r.dialogue_id).or_default().push(r);
    }
    for (id, mut turns) in grouped {
        turns.sort_by_key(|r| r.turn_index);
        let mut prev = DialogueState::new();
        for (k, r) in turns.iter().enumerate() {
            if r.turn_index as usize != k + 1 {
                return Err(DstError::Inconsistent(format!(
                    "{id}: turn {} out of sequence",
                    r.turn_index
                )));
            }
            if prev.update(&r.parsed_delta) != r.cumulative {
                return Err(DstError::Inconsistent(format!(
                    "{id} turn {}: cumulative does not follow from the delta",
                    r.turn_index
                )));
            }
            if r.parse_status == ParseStatus::Failed && !r.parsed_delta.is_empty() {
                return Err(DstError::Inconsistent(format!(
                    "{id} turn {}: failed parse with a delta",
                    r.turn_index
                )));
            }
            prev = r.cumulative.clone();
        }
    }
    Ok(records)
}

fn sort_records(records: &mut [PredictionRecord]) {
    records.sort_by(|a, b| (&a.dialogue_id, a.turn_index).cmp(&(&b.dialogue_id, b.turn_index)));
}

fn to_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

/// Tracks every dialogue, appending records to `out` as dialogues finish and
/// rewriting it sorted at the end. Dialogues already complete in `out` from
/// an interrupted run with the same settings are not queried again.
pub fn run_dst(
    runner: &DstRunner<'_>,
    dialogues: &[Dialogue],
    out: &Path,
    options: &DstOptions,
    abort: Option<&AtomicBool>,
) -> Result<DstOutcome, DstError> {
    let corpus_sha256 = match &options.corpus_path {
        Some(p) => sha256_hex(&fs::read(p).map_err(io_err(p))?),
        None => sha256_hex(
            serde_json::to_string(dialogues)
                .expect("dialogues serialize")
                .as_bytes(),
        ),
    };
    let calls_before = runner.gateway.call_count();
    let mut manifest = RunManifest {
        model: runner.model.clone(),
        corpus_path: options.corpus_path.as_ref().map(|p| p.display().to_string()),
        corpus_sha256,
        variant: runner.variant,
        carriage: runner.carriage,
        prompt_version: runner.gateway.prompt_version().to_string(),
        started_at: now(),
        finished_at: None,
        predictions_file: out.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        predictions_sha256: None,
        dialogues: dialogues.len(),
        turns: dialogues.iter().map(|d| d.turns.len()).sum(),
        parse_status: BTreeMap::new(),
        requests: 0,
    };

    let manifest_file = manifest_path(out);
    let mut done: HashMap<String, Vec<PredictionRecord>> = HashMap::new();
    if out.exists() {
        let previous: Option<RunManifest> = fs::read_to_string(&manifest_file)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        match previous {
            Some(prev) if prev.same_run(&manifest) => {
                for r in read_lines(out, true)? {
                    done.entry(r.dialogue_id.clone()).or_default().push(r);
                }
            }
            Some(_) => {
                return Err(DstError::ManifestMismatch(format!(
                    "{} belongs to a run with different settings",
                    out.display()
                )))
            }
            None => {
                return Err(DstError::ManifestMismatch(format!(
                    "{} exists without a readable manifest",
                    out.display()
                )))
            }
        }
    }
    let mut slots: Vec<Option<Vec<PredictionRecord>>> = dialogues
        .iter()
        .map(|d| {
            done.remove(&d.id).and_then(|mut recs| {
                recs.sort_by_key(|r| r.turn_index);
                let complete =
                    recs.len() == d.turns.len() && recs.iter().zip(&d.turns).all(|(r, t)| r.turn_index == t.index);
                complete.then_some(recs)
            })
        })
        .collect();
    let resumed_dialogues = slots.iter().filter(|s| s.is_some()).count();
    if resumed_dialogues > 0 {
        log::info!("resuming: {resumed_dialogues} dialogues already tracked");
    }

    write_atomic(&manifest_file, manifest_json(&manifest).as_bytes()).map_err(io_err(&manifest_file))?;
    let kept: Vec<PredictionRecord> = slots.iter().flatten().flatten().cloned().collect();
    write_atomic(out, to_jsonl(&kept).as_bytes()).map_err(io_err(out))?;
    let sink = Mutex::new(OpenOptions::new().append(true).open(out).map_err(io_err(out))?);

    let pending: Vec<usize> = (0..dialogues.len()).filter(|&i| slots[i].is_none()).collect();
    let local_abort = AtomicBool::new(false);
    let abort = abort.unwrap_or(&local_abort);
    let next = AtomicUsize::new(0);
    let results = Mutex::new(&mut slots);
    let first_error: Mutex<Option<DstError>> = Mutex::new(None);
    let workers = options.workers.max(1).min(pending.len().max(1));

    let work = || loop {
        if abort.load(Ordering::SeqCst) {
            return;
        }
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some(&i) = pending.get(k) else { return };
        let outcome = runner.track_dialogue(&dialogues[i], abort).and_then(|records| {
            let mut file = sink.lock().unwrap_or_else(|e| e.into_inner());
            file.write_all(to_jsonl(&records).as_bytes())
                .and_then(|_| file.flush())
                .map_err(io_err(out))?;
            Ok(records)
        });
        match outcome {
            Ok(records) => results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(records),
            Err(DstError::Aborted) => return,
            Err(e) => {
                log::error!("{}: {e}; aborting run", dialogues[i].id);
                abort.store(true, Ordering::SeqCst);
                first_error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                return;
            }
        }
    };
    thread::scope(|scope| {
        for _ in 1..workers {
            scope.spawn(work);
        }
        work();
    });
    drop(sink);

    if let Some(e) = first_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    let Some(per_dialogue) = slots.into_iter().collect::<Option<Vec<_>>>() else {
        return Err(DstError::Aborted);
    };
    let mut records: Vec<PredictionRecord> = per_dialogue.into_iter().flatten().collect();
    sort_records(&mut records);
    let body = to_jsonl(&records);
    write_atomic(out, body.as_bytes()).map_err(io_err(out))?;

    for r in &records {
        *manifest.parse_status.entry(r.parse_status).or_default() += 1;
    }
    manifest.predictions_sha256 = Some(sha256_hex(body.as_bytes()));
    manifest.requests = runner.gateway.call_count() - calls_before;
    manifest.finished_at = Some(now());
    write_atomic(&manifest_file, manifest_json(&manifest).as_bytes()).map_err(io_err(&manifest_file))?;
    Ok(DstOutcome {
        records,
        manifest,
        resumed_dialogues,
    })
}

fn manifest_json(manifest: &RunManifest) -> String {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    text
}

/// Records grouped by dialogue id, each sorted by turn.
pub fn group_predictions(records: &[PredictionRecord]) -> BTreeMap<&str, Vec<&PredictionRecord>> {
    let mut grouped: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.dialogue_id.as_str()).or_default().push(r);
    }
    for turns in grouped.values_mut() {
        turns.sort_by_key(|r| r.turn_index);
    }
    grouped
}
