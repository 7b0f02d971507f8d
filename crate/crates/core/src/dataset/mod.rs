//! PAXOBS labels, annotated complex-word records and corpus ingestion.
//!
//! Every character of a complex word carries one label: `P` (prefix), `S`
//! (suffix), `X` (shared by several bases), `O` (from no base), or a base
//! letter `A`, `B`, `C`, ... for material exclusive to one base. Base `A` is
//! the one whose exclusive material appears first.

mod corpus;
mod labeling;
mod record;
mod segmentation;

pub use corpus::{
    corpus_stats, load_corpus, read_corpus, write_corpus, CorpusReport, CorpusStats, LineIssue, LineProblem,
};
pub use labeling::{validate_labeling, Label, PaxobsLabeling, ValidationReport, Violation, MAX_BASES};
pub use record::{ComplexWordRecord, RawRecord, RecordIssue, WordClass};
pub use segmentation::Segmentation;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid label {found:?} at position {index}")]
    BadLabel { index: usize, found: char },
    #[error("invalid labeling: {}", join(.0))]
    InvalidLabeling(Vec<Violation>),
    #[error("invalid record {surface:?}: {}", join(.issues))]
    InvalidRecord { surface: String, issues: Vec<RecordIssue> },
    #[error("cut {cut} outside (0, {len})")]
    CutOutOfRange { cut: usize, len: usize },
    #[error("cuts are not strictly increasing")]
    CutsNotIncreasing,
    #[error("empty piece in segmentation")]
    EmptyPiece,
    #[error("corpus has invalid lines:\n{}", join_lines(.0))]
    Corpus(Vec<LineIssue>),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

fn join_lines(items: &[LineIssue]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n")
}
