//! Corpus-trained subword tokenizers used as blend segmenters.

mod bpe;
mod unigram;
mod wordpiece;

pub use bpe::{train_bpe, BpeModel};
pub use unigram::{train_unigram, train_unigram_with, UnigramConfig, UnigramLmModel};
pub use wordpiece::WordPieceVocab;

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

use crate::dataset::{DatasetError, Segmentation};
use crate::text::Normalizer;

/// Default vocabulary size, matching the standard uncased WordPiece vocabulary.
pub const DEFAULT_VOCAB_SIZE: usize = 30_522;

/// WordPiece continuation marker.
pub const CONTINUATION: &str = "##";

#[derive(Debug, Error)]
pub enum SubwordError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary size {requested} is smaller than the alphabet ({alphabet} characters)")]
    VocabTooSmall { requested: usize, alphabet: usize },
    #[error("cannot encode an empty word")]
    EmptyWord,
    #[error("no vocabulary piece matches {word:?} at character {position}")]
    UnknownPiece { word: String, position: usize },
    #[error("pieces {pieces:?} do not spell {word:?}")]
    ConcatMismatch { word: String, pieces: Vec<String> },
    #[error("line {line}: {msg}")]
    BadModelFile { line: usize, msg: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that splits a word into pieces.
pub trait SubwordModel {
    fn encode(&self, word: &str) -> Result<Vec<String>, SubwordError>;

    /// Marker on word-internal pieces, if the model uses one.
    fn continuation_marker(&self) -> Option<&str> {
        None
    }
}

/// Word frequencies of a whitespace-pretokenized corpus.
#[derive(Debug, Clone, Default)]
pub struct WordCounts {
    counts: HashMap<String, u64>,
}

impl WordCounts {
    pub fn from_reader<R: BufRead>(reader: R, normalizer: Normalizer) -> Result<Self, SubwordError> {
        let mut wc = WordCounts::default();
        for line in reader.lines() {
            let line = normalizer.apply(&line?);
            for w in line.split_whitespace() {
                wc.add(w, 1);
            }
        }
        Ok(wc)
    }

    pub fn from_text(text: &str, normalizer: Normalizer) -> Self {
        WordCounts::from_reader(text.as_bytes(), normalizer).expect("reading from memory")
    }

    pub fn add(&mut self, word: &str, count: u64) {
        if !word.is_empty() {
            *self.counts.entry(word.to_string()).or_insert(0) += count;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Words in lexicographic order, for deterministic iteration.
    pub fn sorted(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.counts.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        v.sort_unstable();
        v
    }

    pub fn alphabet_size(&self) -> usize {
        let mut chars: Vec<char> = self.counts.keys().flat_map(|w| w.chars()).collect();
        chars.sort_unstable();
        chars.dedup();
        chars.len()
    }
}

/// Cuts at cumulative piece lengths. Non-initial pieces lose a leading
/// `marker` when one is given.
pub fn pieces_to_segmentation(
    word: &str,
    pieces: &[String],
    marker: Option<&str>,
) -> Result<Segmentation, SubwordError> {
    let stripped: Vec<&str> = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| match marker {
            Some(m) if i > 0 => p.strip_prefix(m).unwrap_or(p),
            _ => p.as_str(),
        })
        .collect();
    if stripped.concat() != word || stripped.iter().any(|p| p.is_empty()) {
        return Err(SubwordError::ConcatMismatch {
            word: word.to_string(),
            pieces: pieces.to_vec(),
        });
    }
    Ok(Segmentation::from_piece_lengths(
        stripped.iter().map(|p| p.chars().count()),
    )?)
}
