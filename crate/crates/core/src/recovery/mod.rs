//! Base recovery: candidate generation and ranking evaluation.
//!
//! For a blend with bases A and B (the last base is always B), each side
//! gets a list of vocabulary words that could have contributed the blend's
//! leading or trailing material. A ranker orders candidate pairs, or one
//! side's candidates with the other base fixed, and the position of the
//! true base(s) is scored by reciprocal rank.

mod candidates;
mod metrics;

pub(crate) use candidates::is_vector_header;
pub use candidates::{generate_candidates, CandidateConfig, CandidateSet, Vocabulary, DEFAULT_MIN_OVERLAP};
pub use metrics::{
    aggregate_recovery, format_recovery_tsv, lower_bound_ranking, score_ranking, Ranking, RecoveryMetrics,
    RecoveryScore, RecoveryTableRow,
};

use thiserror::Error;

/// One side of a blend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("{id}: base recovery needs at least two bases, found {bases}")]
    TooFewBases { id: String, bases: usize },
    #[error("{id}: {what} ranking is not a permutation of the candidates")]
    NotPermutation { id: String, what: &'static str },
    #[error("ranking is for {found:?}, candidates are for {expected:?}")]
    IdMismatch { expected: String, found: String },
    #[error("cannot aggregate an empty list of scores")]
    Empty,
    #[error("some rankings include {what} and some do not")]
    Mixed { what: &'static str },
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
