//! Second-user extension of dialogue turns.
//!
//! Each turn is extended by identifying a speech act for the second user,
//! generating an utterance of that type and validating it against the
//! current gold slots. Up to three generate/validate cycles are tried before
//! the turn's second-user utterance is discarded.

mod extend;
mod parse;
mod templates;

pub use extend::{
    extend_corpus, read_checkpoint, render_history, shuffle_seed, ActPipeline, ExtendOptions, ExtendOutcome, Rejection,
    TurnExtensionResult, MAX_ATTEMPTS,
};
pub use parse::{parse_act_reply, parse_verdict};
pub use templates::{option_order, placeholders, render, PromptTemplates, TemplateError};

use crate::llm::GatewayError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("speech-act reply names none or several options: {reply:?}")]
    UnparseableAct { reply: String },
    #[error("validator reply has no True/False token: {reply:?}")]
    UnparseableVerdict { reply: String },
    #[error("generation reply is blank")]
    EmptyGeneration,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("checkpoint {path}: {source}")]
    Checkpoint { path: String, source: std::io::Error },
    #[error("checkpoint {path} line {line}: {message}")]
    CheckpointFormat { path: String, line: usize, message: String },
    #[error("run aborted")]
    Aborted,
}
