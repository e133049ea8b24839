//! Human-evaluation support: seeded task sampling, a journaled judgment
//! store and the HTTP API consumed by the annotation UI.

mod http;
mod sample;
mod store;

use std::path::{Path, PathBuf};

pub use http::{router, serve, AnnotateService};
pub use sample::{sample_size, sample_tasks, AnnotationTask};
pub use store::{Judgment, JudgmentStore, Ratios, SubmitOutcome, Summary};

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("sample fraction must be in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("dialogue {0} is not in the annotation sample")]
    UnknownDialogue(String),
    #[error("evaluator {0} is not registered")]
    UnknownEvaluator(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: malformed journal entry: {message}")]
    Journal {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl AnnotateError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> AnnotateError {
        AnnotateError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[cfg(test)]
mod tests;
