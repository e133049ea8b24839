//! Corpus statistics, comparison tables, error-case mining and clean-subset
//! scoring.

mod cases;
mod corpus;
mod tables;

pub use cases::{clean_subset_eval, consistent_dialogues, mine_error_cases, ErrorCase, ErrorCategory};
pub use corpus::{corpus_stats, render_stats_markdown, CorpusStats, MeanWords};
pub use tables::{fmt_delta, fmt_value, render_comparison, ComparisonDocument, ModelComparison, DELTA_LABEL};

use crate::metrics::AlignmentError;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("{model} ({variant}): domains {found:?} differ from {expected:?}")]
    DomainMismatch {
        model: String,
        variant: &'static str,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("no dialogue qualifies for the clean subset")]
    EmptySubset,
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}
