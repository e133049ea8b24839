use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{AnnotateError, AnnotationTask};
use crate::metrics::Fraction;

/// One evaluator's verdict on one sampled dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub dialogue_id: String,
    pub evaluator_id: String,
    pub bias_free: bool,
    pub quality_ok: bool,
    pub slot_consistent: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<DateTime<Utc>>,
}

impl Judgment {
    fn same_verdict(&self, other: &Judgment) -> bool {
        self.bias_free == other.bias_free
            && self.quality_ok == other.quality_ok
            && self.slot_consistent == other.slot_consistent
            && self.note == other.note
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
enum JournalEntry {
    Register { evaluator_id: String },
    Judgment { revision: u32, judgment: Judgment },
}

/// What a submission did to the stored state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubmitOutcome {
    Created,
    Updated { revision: u32 },
    Unchanged,
}

/// Share of judgments answering yes for each question.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Ratios {
    pub bias_free: Fraction,
    pub quality_ok: Fraction,
    pub slot_consistent: Fraction,
}

impl Ratios {
    fn record(&mut self, bias_free: bool, quality_ok: bool, slot_consistent: bool) {
        self.bias_free.record(bias_free);
        self.quality_ok.record(quality_ok);
        self.slot_consistent.record(slot_consistent);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub judgments: usize,
    pub evaluators: usize,
    pub sampled_dialogues: usize,
    /// Judged dialogues over sampled dialogues.
    pub coverage: Fraction,
    /// Ratios over every latest judgment.
    pub per_judgment: Ratios,
    /// Ratios over judged dialogues, counting yes only when all evaluators agree.
    pub per_dialogue_consensus: Ratios,
}

#[derive(Debug, Default)]
struct State {
    evaluators: BTreeSet<String>,
    latest: BTreeMap<(String, String), (u32, Judgment)>,
}

impl State {
    fn apply(&mut self, entry: JournalEntry) {
        match entry {
            JournalEntry::Register { evaluator_id } => {
                self.evaluators.insert(evaluator_id);
            }
            JournalEntry::Judgment { revision, judgment } => {
                let key = (judgment.dialogue_id.clone(), judgment.evaluator_id.clone());
                let newer = self.latest.get(&key).is_none_or(|(r, _)| revision >= *r);
                if newer {
                    self.latest.insert(key, (revision, judgment));
                }
            }
        }
    }
}

/// Judgments backed by an append-only JSONL journal. Replaying the journal
/// rebuilds the latest judgment per (dialogue, evaluator); earlier revisions
/// stay in the file as the audit trail.
#[derive(Debug)]
pub struct JudgmentStore {
    tasks: Vec<AnnotationTask>,
    sampled: BTreeSet<String>,
    open_registration: bool,
    state: RwLock<State>,
    journal: Mutex<Option<(PathBuf, File)>>,
}

impl JudgmentStore {
    /// In-memory store. With an empty `evaluators` list, any evaluator that
    /// fetches a task is registered on the spot.
    pub fn in_memory(tasks: Vec<AnnotationTask>, evaluators: &[String]) -> JudgmentStore {
        let sampled = tasks.iter().map(|t| t.dialogue_id.clone()).collect();
        let state = State {
            evaluators: evaluators.iter().cloned().collect(),
            ..State::default()
        };
        JudgmentStore {
            tasks,
            sampled,
            open_registration: evaluators.is_empty(),
            state: RwLock::new(state),
            journal: Mutex::new(None),
        }
    }

    /// Store that replays and then appends to the journal at `path`.
    pub fn open(
        path: &Path,
        tasks: Vec<AnnotationTask>,
        evaluators: &[String],
    ) -> Result<JudgmentStore, AnnotateError> {
        let store = JudgmentStore::in_memory(tasks, evaluators);
        if path.exists() {
            let file = File::open(path).map_err(|e| AnnotateError::io(path, e))?;
            let mut state = store.state.write().expect("state lock");
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| AnnotateError::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: JournalEntry = serde_json::from_str(&line).map_err(|e| AnnotateError::Journal {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: e.to_string(),
                })?;
                state.apply(entry);
            }
            log::info!("replayed {} judgments from {}", state.latest.len(), path.display());
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| AnnotateError::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| AnnotateError::io(path, e))?;
        *store.journal.lock().expect("journal lock") = Some((path.to_path_buf(), file));
        Ok(store)
    }

    pub fn tasks(&self) -> &[AnnotationTask] {
        &self.tasks
    }

    pub fn is_sampled(&self, dialogue_id: &str) -> bool {
        self.sampled.contains(dialogue_id)
    }

    pub fn evaluators(&self) -> Vec<String> {
        self.state
            .read()
            .expect("state lock")
            .evaluators
            .iter()
            .cloned()
            .collect()
    }

    fn append(&self, journal: &mut Option<(PathBuf, File)>, entry: &JournalEntry) -> Result<(), AnnotateError> {
        if let Some((path, file)) = journal.as_mut() {
            let mut line = serde_json::to_string(entry).expect("journal entry serializes");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| AnnotateError::io(path, e))?;
        }
        Ok(())
    }

    /// Registers `evaluator_id` if registration is open, otherwise checks it.
    pub fn ensure_evaluator(&self, evaluator_id: &str) -> Result<(), AnnotateError> {
        if self.state.read().expect("state lock").evaluators.contains(evaluator_id) {
            return Ok(());
        }
        if !self.open_registration || evaluator_id.trim().is_empty() {
            return Err(AnnotateError::UnknownEvaluator(evaluator_id.to_string()));
        }
        let mut journal = self.journal.lock().expect("journal lock");
        let mut state = self.state.write().expect("state lock");
        if state.evaluators.contains(evaluator_id) {
            return Ok(());
        }
        let entry = JournalEntry::Register {
            evaluator_id: evaluator_id.to_string(),
        };
        self.append(&mut journal, &entry)?;
        state.apply(entry);
        log::info!("registered evaluator {evaluator_id}");
        Ok(())
    }

    /// First sampled task the evaluator has not judged yet.
    pub fn next_task(&self, evaluator_id: &str) -> Result<Option<AnnotationTask>, AnnotateError> {
        self.ensure_evaluator(evaluator_id)?;
        let state = self.state.read().expect("state lock");
        Ok(self
            .tasks
            .iter()
            .filter(|t| t.assigned_evaluators.is_empty() || t.assigned_evaluators.iter().any(|e| e == evaluator_id))
            .find(|t| {
                !state
                    .latest
                    .contains_key(&(t.dialogue_id.clone(), evaluator_id.to_string()))
            })
            .cloned())
    }

    /// Number of tasks the evaluator has judged.
    pub fn judged_by(&self, evaluator_id: &str) -> usize {
        let state = self.state.read().expect("state lock");
        state.latest.keys().filter(|(_, e)| e == evaluator_id).count()
    }

    pub fn submit(&self, mut judgment: Judgment) -> Result<SubmitOutcome, AnnotateError> {
        if !self.is_sampled(&judgment.dialogue_id) {
            return Err(AnnotateError::UnknownDialogue(judgment.dialogue_id));
        }
        if !self
            .state
            .read()
            .expect("state lock")
            .evaluators
            .contains(&judgment.evaluator_id)
        {
            return Err(AnnotateError::UnknownEvaluator(judgment.evaluator_id));
        }
        let mut journal = self.journal.lock().expect("journal lock");
        let mut state = self.state.write().expect("state lock");
        let key = (judgment.dialogue_id.clone(), judgment.evaluator_id.clone());
        let (revision, outcome) = match state.latest.get(&key) {
            Some((_, prev)) if prev.same_verdict(&judgment) => return Ok(SubmitOutcome::Unchanged),
            Some((r, _)) => (r + 1, SubmitOutcome::Updated { revision: r + 1 }),
            None => (1, SubmitOutcome::Created),
        };
        judgment.submitted_at.get_or_insert_with(Utc::now);
        let entry = JournalEntry::Judgment { revision, judgment };
        self.append(&mut journal, &entry)?;
        state.apply(entry);
        Ok(outcome)
    }

    /// Latest judgments ordered by dialogue then evaluator.
    pub fn judgments(&self) -> Vec<Judgment> {
        let state = self.state.read().expect("state lock");
        state.latest.values().map(|(_, j)| j.clone()).collect()
    }

    pub fn summary(&self) -> Summary {
        let state = self.state.read().expect("state lock");
        let mut per_judgment = Ratios::default();
        let mut by_dialogue: BTreeMap<&str, (bool, bool, bool)> = BTreeMap::new();
        for (_, j) in state.latest.values() {
            per_judgment.record(j.bias_free, j.quality_ok, j.slot_consistent);
            let agg = by_dialogue.entry(&j.dialogue_id).or_insert((true, true, true));
            agg.0 &= j.bias_free;
            agg.1 &= j.quality_ok;
            agg.2 &= j.slot_consistent;
        }
        let mut consensus = Ratios::default();
        for &(b, q, s) in by_dialogue.values() {
            consensus.record(b, q, s);
        }
        Summary {
            judgments: state.latest.len(),
            evaluators: state.evaluators.len(),
            sampled_dialogues: self.sampled.len(),
            coverage: Fraction::new(by_dialogue.len() as u64, self.sampled.len() as u64),
            per_judgment,
            per_dialogue_consensus: consensus,
        }
    }

    /// Writes the latest judgments as JSONL.
    pub fn export(&self, out: &Path) -> Result<usize, AnnotateError> {
        let judgments = self.judgments();
        let mut text = String::new();
        for j in &judgments {
            text.push_str(&serde_json::to_string(j).expect("judgment serializes"));
            text.push('\n');
        }
        crate::util::write_atomic(out, text.as_bytes()).map_err(|e| AnnotateError::io(out, e))?;
        Ok(judgments.len())
    }
}
