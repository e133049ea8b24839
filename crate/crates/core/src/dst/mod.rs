//! Zero-shot dialogue state tracking runs.
//!
//! Each turn's query carries the task preamble and the transcript so far as
//! `"agent"` / `"user1"` lines, plus `"user2"` lines in the multi-user
//! variant. Replies are parsed into state updates and accumulated.

mod parse;
mod prompt;
mod run;

pub use parse::{lookup_slot, parse_state_output, ParseStatus};
pub use prompt::{assemble_prompt, render_transcript, turn_lines, Carriage, Variant};
pub use run::{
    group_predictions, load_predictions, manifest_path, run_dst, DstOptions, DstOutcome, DstRunner, PredictionRecord,
    RunManifest,
};

use crate::llm::GatewayError;

#[derive(Debug, thiserror::Error)]
pub enum DstError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("inconsistent predictions: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    ManifestMismatch(String),
    #[error("run aborted")]
    Aborted,
}
