//! Multi-user extension of task-oriented dialogue corpora and zero-shot
//! dialogue state tracking evaluation.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`model`]: dialogues, turns, slots, states and speech acts.
//! - [`corpus`]: MultiWOZ 2.1 ingest and the extended corpus format.
//! - [`llm`]: chat-completion gateway with providers, disk cache and a scripted mock.
//! - [`pipeline`]: identify / generate / validate extension of each turn.
//! - [`dst`]: incremental prompt assembly, state parsing and prediction runs.
//! - [`metrics`]: joint goal accuracy, slot accuracy and slot-class accuracies.
//! - [`stats`]: corpus statistics, comparison tables and error-case mining.
//! - [`annotate`]: human-evaluation sampling, judgment journal and HTTP API.

pub mod annotate;
pub mod config;
pub mod corpus;
pub mod dst;
pub mod llm;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod stats;

#[cfg(test)]
mod testkit;
mod util;

pub use config::RunConfig;
pub use corpus::{load_corpus, save_extended, CorpusFile, CorpusFormat, IngestReport, PipelineMeta};
pub use dst::{PredictionRecord, RunManifest, Variant};
pub use llm::{ChatRequest, ChatResponse, Gateway, GatewayError};
pub use metrics::EvalReport;
pub use model::{
    canonicalize_value, states_equal, update_state, Dialogue, DialogueState, Domain, SlotName, SlotSchema, SlotValue,
    SpeechAct, Turn, User2Record,
};
