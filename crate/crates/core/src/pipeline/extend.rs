use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::templates::{self, render, PromptTemplates};
use super::{parse_act_reply, parse_verdict, PipelineError};
use crate::llm::{ChatRequest, Gateway, GatewayError};
use crate::model::{Dialogue, SpeechAct, Turn, User2Record};
use crate::util::{stable_hash64, word_count};

/// Generate/validate cycles tried per turn before discarding.
pub const MAX_ATTEMPTS: u8 = 3;

const SOFT_WORD_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub attempt: u8,
    pub generated_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validator_reply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnExtensionResult {
    /// Identified act, kept even when every attempt was rejected.
    pub act: SpeechAct,
    pub utterance: Option<String>,
    pub attempts: u8,
    pub rejection_log: Vec<Rejection>,
}

impl TurnExtensionResult {
    fn discarded(act: SpeechAct, attempts: u8, rejection_log: Vec<Rejection>) -> TurnExtensionResult {
        TurnExtensionResult {
            act,
            utterance: None,
            attempts,
            rejection_log,
        }
    }

    pub fn record(&self) -> User2Record {
        match &self.utterance {
            Some(text) => User2Record::accepted(text.clone(), self.act, self.attempts),
            None => User2Record::discarded(self.attempts),
        }
    }
}

/// Per-turn shuffle seed derived from the run seed and turn identity.
pub fn shuffle_seed(run_seed: u64, dialogue_id: &str, turn_index: u32) -> u64 {
    stable_hash64(&format!("{run_seed}:{dialogue_id}:{turn_index}"))
}

/// `Agent:` / `User1:` / `User2:` lines for `turns`, skipping empty agent
/// lines and discarded second-user turns.
pub fn render_history(turns: &[Turn]) -> String {
    let mut lines = Vec::new();
    for turn in turns {
        if !turn.agent.is_empty() {
            lines.push(format!("Agent: {}", turn.agent));
        }
        lines.push(format!("User1: {}", turn.user1));
        if let Some(text) = turn.user2_text() {
            lines.push(format!("User2: {text}"));
        }
    }
    lines.join("\n")
}

pub struct ActPipeline<'a> {
    gateway: &'a Gateway,
    templates: &'a PromptTemplates,
    model: String,
    seed: u64,
}

impl<'a> ActPipeline<'a> {
    pub fn new(gateway: &'a Gateway, templates: &'a PromptTemplates, model: &str, seed: u64) -> ActPipeline<'a> {
        ActPipeline {
            gateway,
            templates,
            model: model.to_string(),
            seed,
        }
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn identification_prompt(&self, dialogue_id: &str, history: &[Turn], turn: &Turn) -> String {
        let template = self
            .templates
            .shuffled_identification(shuffle_seed(self.seed, dialogue_id, turn.index));
        render(
            &template,
            &[
                (templates::DIALOGUE_HISTORY, &render_history(history)),
                (templates::AGENT_UTTERANCE, &turn.agent),
                (templates::USER1_UTTERANCE, &turn.user1),
            ],
        )
    }

    pub fn generation_prompt(&self, act: SpeechAct, history: &[Turn], turn: &Turn) -> String {
        let mut rendered = render_history(history);
        if !turn.agent.is_empty() {
            if !rendered.is_empty() {
                rendered.push('\n');
            }
            rendered.push_str(&format!("Agent: {}", turn.agent));
        }
        render(
            &self.templates.generation,
            &[
                (templates::DIALOGUE_HISTORY, &rendered),
                (templates::USER1_UTTERANCE, &turn.user1),
                (templates::SLOT_VALUES, &turn.gold_cumulative.render_inline()),
                (templates::UTTERANCE_TYPE, act.label()),
            ],
        )
    }

    pub fn validation_prompt(&self, turn: &Turn, user2: &str) -> String {
        render(
            &self.templates.validation,
            &[
                (templates::AGENT_UTTERANCE, &turn.agent),
                (templates::USER1_UTTERANCE, &turn.user1),
                (templates::USER2_UTTERANCE, user2),
                (templates::SLOT_VALUES, &turn.gold_cumulative.render_inline()),
            ],
        )
    }

    fn ask(&self, prompt: String, tag: Option<String>) -> Result<String, GatewayError> {
        let mut request = ChatRequest::single_user(&self.model, prompt);
        request.cache_tag = tag;
        Ok(self.gateway.complete(&request)?.content)
    }

    pub fn identify_act(&self, dialogue_id: &str, history: &[Turn], turn: &Turn) -> Result<SpeechAct, PipelineError> {
        let reply = self.ask(self.identification_prompt(dialogue_id, history, turn), None)?;
        parse_act_reply(&reply).ok_or(PipelineError::UnparseableAct { reply })
    }

    /// Trimmed generated utterance for `attempt` (1-based).
    pub fn generate_user2(
        &self,
        act: SpeechAct,
        history: &[Turn],
        turn: &Turn,
        attempt: u8,
    ) -> Result<String, PipelineError> {
        let reply = self.ask(
            self.generation_prompt(act, history, turn),
            Some(format!("gen-{attempt}")),
        )?;
        let text = reply.trim();
        if text.is_empty() {
            return Err(PipelineError::EmptyGeneration);
        }
        let words = word_count(text);
        if words > SOFT_WORD_LIMIT {
            log::warn!("turn {}: generated utterance has {words} words", turn.index);
        }
        Ok(text.to_string())
    }

    pub fn validate_user2(&self, turn: &Turn, user2: &str, attempt: u8) -> Result<bool, PipelineError> {
        let reply = self.validator_reply(turn, user2, attempt)?;
        parse_verdict(&reply).ok_or(PipelineError::UnparseableVerdict { reply })
    }

    fn validator_reply(&self, turn: &Turn, user2: &str, attempt: u8) -> Result<String, GatewayError> {
        self.ask(self.validation_prompt(turn, user2), Some(format!("val-{attempt}")))
    }

    /// Runs identification once and up to [`MAX_ATTEMPTS`] generate/validate
    /// cycles. Only hard gateway errors are returned.
    pub fn extend_turn(
        &self,
        dialogue_id: &str,
        history: &[Turn],
        turn: &Turn,
    ) -> Result<TurnExtensionResult, PipelineError> {
        let act = match self.identify_act(dialogue_id, history, turn) {
            Ok(act) => act,
            Err(PipelineError::Gateway(e)) if e.is_hard() => return Err(e.into()),
            Err(e) => {
                log::warn!("{dialogue_id} turn {}: {e}; discarding", turn.index);
                return Ok(TurnExtensionResult::discarded(SpeechAct::None, 0, Vec::new()));
            }
        };
        let mut log = Vec::new();
        for attempt in 1..=MAX_ATTEMPTS {
            let text = match self.generate_user2(act, history, turn, attempt) {
                Ok(text) => text,
                Err(PipelineError::Gateway(e)) if e.is_hard() => return Err(e.into()),
                Err(e) => {
                    log.push(Rejection {
                        attempt,
                        generated_text: String::new(),
                        validator_reply: None,
                        note: Some(e.to_string()),
                    });
                    continue;
                }
            };
            let (reply, note) = match self.validator_reply(turn, &text, attempt) {
                Ok(reply) => (Some(reply), None),
                Err(e) if e.is_hard() => return Err(e.into()),
                Err(e) => (None, Some(e.to_string())),
            };
            let verdict = reply.as_deref().and_then(parse_verdict);
            if verdict == Some(true) {
                return Ok(TurnExtensionResult {
                    act,
                    utterance: Some(text),
                    attempts: attempt,
                    rejection_log: log,
                });
            }
            let note = note.or_else(|| {
                verdict.is_none().then(|| {
                    log::warn!(
                        "{dialogue_id} turn {}: unparseable verdict treated as False",
                        turn.index
                    );
                    "unparseable verdict".to_string()
                })
            });
            log.push(Rejection {
                attempt,
                generated_text: text,
                validator_reply: reply,
                note,
            });
        }
        Ok(TurnExtensionResult::discarded(act, MAX_ATTEMPTS, log))
    }

    /// Extends every turn in order; earlier accepted utterances feed the
    /// history of later turns.
    pub fn extend_dialogue(
        &self,
        dialogue: &Dialogue,
        abort: &AtomicBool,
    ) -> Result<(Dialogue, Vec<TurnExtensionResult>), PipelineError> {
        let mut out = dialogue.clone();
        for turn in &mut out.turns {
            turn.user2 = None;
        }
        let mut results = Vec::with_capacity(out.turns.len());
        for i in 0..out.turns.len() {
            if abort.load(Ordering::SeqCst) {
                return Err(PipelineError::Aborted);
            }
            let (history, rest) = out.turns.split_at_mut(i);
            let turn = &mut rest[0];
            let result = self.extend_turn(&dialogue.id, history, turn)?;
            turn.user2 = Some(result.record());
            results.push(result);
        }
        Ok((out, results))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExtendOptions {
    /// Dialogues processed concurrently; 0 is treated as 1.
    pub workers: usize,
    /// JSONL file of completed dialogues, appended as they finish and read
    /// back on the next run.
    pub checkpoint: Option<PathBuf>,
    /// JSONL file receiving one line per extended turn.
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendOutcome {
    /// Extended dialogues in input order.
    pub dialogues: Vec<Dialogue>,
    /// Dialogues taken from the checkpoint instead of being re-extended.
    pub resumed: usize,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    dialogue: &'a str,
    turn: u32,
    #[serde(flatten)]
    result: &'a TurnExtensionResult,
}

struct Sink {
    path: PathBuf,
    file: Mutex<File>,
}

impl Sink {
    fn open(path: &Path) -> Result<Sink, PipelineError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|source| checkpoint_io(path, source))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| checkpoint_io(path, source))?;
        Ok(Sink {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    fn append(&self, line: &str) -> Result<(), PipelineError> {
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(file, "{line}")
            .and_then(|_| file.flush())
            .map_err(|source| checkpoint_io(&self.path, source))
    }
}

fn checkpoint_io(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Checkpoint {
        path: path.display().to_string(),
        source,
    }
}

fn same_source(a: &Dialogue, b: &Dialogue) -> bool {
    a.id == b.id
        && a.domains == b.domains
        && a.turns.len() == b.turns.len()
        && a.turns.iter().zip(&b.turns).all(|(x, y)| {
            x.index == y.index
                && x.agent == y.agent
                && x.user1 == y.user1
                && x.gold_delta == y.gold_delta
                && x.gold_cumulative == y.gold_cumulative
        })
}

/// Completed dialogues recorded in a checkpoint. A truncated final line is
/// ignored.
pub fn read_checkpoint(path: &Path) -> Result<HashMap<String, Dialogue>, PipelineError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(source) => return Err(checkpoint_io(path, source)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|source| checkpoint_io(path, source))?;
    let mut done = HashMap::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Dialogue>(line) {
            Ok(d) => {
                done.insert(d.id.clone(), d);
            }
            Err(e) if i + 1 == lines.len() => {
                log::warn!("{}: ignoring truncated final line ({e})", path.display());
            }
            Err(e) => {
                return Err(PipelineError::CheckpointFormat {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(done)
}

/// Extends `dialogues` with a bounded worker pool. On a hard gateway error
/// the remaining work is abandoned and the error returned; dialogues already
/// finished stay in the checkpoint.
pub fn extend_corpus(
    pipeline: &ActPipeline<'_>,
    dialogues: &[Dialogue],
    options: &ExtendOptions,
    abort: Option<&AtomicBool>,
) -> Result<ExtendOutcome, PipelineError> {
    let mut slots: Vec<Option<Dialogue>> = vec![None; dialogues.len()];
    let mut resumed = 0;
    let checkpoint = match &options.checkpoint {
        Some(path) => {
            let done = read_checkpoint(path)?;
            for (slot, source) in slots.iter_mut().zip(dialogues) {
                match done.get(&source.id) {
                    Some(d) if same_source(d, source) => {
                        *slot = Some(d.clone());
                        resumed += 1;
                    }
                    Some(_) => log::warn!("{}: checkpoint entry differs from input; re-extending", source.id),
                    None => {}
                }
            }
            if resumed > 0 {
                log::info!("resuming: {resumed} dialogues already extended");
            }
            Some(Sink::open(path)?)
        }
        None => None,
    };
    let trace = options.trace.as_deref().map(Sink::open).transpose()?;

    let pending: Vec<usize> = (0..dialogues.len()).filter(|&i| slots[i].is_none()).collect();
    let local_abort = AtomicBool::new(false);
    let abort = abort.unwrap_or(&local_abort);
    let next = AtomicUsize::new(0);
    let results = Mutex::new(&mut slots);
    let first_error: Mutex<Option<PipelineError>> = Mutex::new(None);
    let workers = options.workers.max(1).min(pending.len().max(1));

    let work = || loop {
        if abort.load(Ordering::SeqCst) {
            return;
        }
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some(&i) = pending.get(k) else { return };
        let source = &dialogues[i];
        let outcome = pipeline.extend_dialogue(source, abort).and_then(|(dialogue, turns)| {
            if let Some(trace) = &trace {
                for (turn, result) in dialogue.turns.iter().zip(&turns) {
                    let line = TraceLine {
                        dialogue: &dialogue.id,
                        turn: turn.index,
                        result,
                    };
                    trace.append(&serde_json::to_string(&line).expect("trace line serializes"))?;
                }
            }
            if let Some(checkpoint) = &checkpoint {
                checkpoint.append(&serde_json::to_string(&dialogue).expect("dialogue serializes"))?;
            }
            Ok(dialogue)
        });
        match outcome {
            Ok(dialogue) => results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(dialogue),
            Err(PipelineError::Aborted) => return,
            Err(e) => {
                log::error!("{}: {e}; aborting run", source.id);
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

    if let Some(e) = first_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    let dialogues: Option<Vec<Dialogue>> = slots.into_iter().collect();
    match dialogues {
        Some(dialogues) => Ok(ExtendOutcome { dialogues, resumed }),
        None => Err(PipelineError::Aborted),
    }
}
