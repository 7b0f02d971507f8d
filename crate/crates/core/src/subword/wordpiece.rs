use std::collections::HashMap;
use std::io::BufRead;

use super::{SubwordError, SubwordModel, CONTINUATION};

/// Inference-only WordPiece over a supplied vocabulary.
#[derive(Debug, Clone)]
pub struct WordPieceVocab {
    ids: HashMap<String, usize>,
    entries: Vec<String>,
    max_piece_chars: usize,
    char_fallback: bool,
}

impl WordPieceVocab {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entries: Vec<String> = entries.into_iter().map(Into::into).collect();
        let ids = entries.iter().enumerate().rev().map(|(i, e)| (e.clone(), i)).collect();
        let max_piece_chars = entries
            .iter()
            .map(|e| e.strip_prefix(CONTINUATION).unwrap_or(e).chars().count())
            .max()
            .unwrap_or(1);
        WordPieceVocab {
            ids,
            entries,
            max_piece_chars,
            char_fallback: false,
        }
    }

    /// One piece per line; line index is the piece id.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, SubwordError> {
        let entries = reader.lines().collect::<Result<Vec<_>, _>>()?;
        Ok(WordPieceVocab::new(entries))
    }

    /// When enabled, a position no vocabulary piece covers yields a
    /// single-character piece instead of an error.
    pub fn with_char_fallback(mut self, enabled: bool) -> Self {
        self.char_fallback = enabled;
        self
    }

    pub fn id(&self, piece: &str) -> Option<usize> {
        self.ids.get(piece).copied()
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.ids.contains_key(piece)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl SubwordModel for WordPieceVocab {
    /// Greedy longest match first, left to right.
    fn encode(&self, word: &str) -> Result<Vec<String>, SubwordError> {
        if word.is_empty() {
            return Err(SubwordError::EmptyWord);
        }
        let chars: Vec<char> = word.chars().collect();
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut candidate = String::new();
        while start < chars.len() {
            let mut found = None;
            let longest = chars.len().min(start + self.max_piece_chars);
            for end in (start + 1..=longest).rev() {
                candidate.clear();
                if start > 0 {
                    candidate.push_str(CONTINUATION);
                }
                candidate.extend(&chars[start..end]);
                if self.ids.contains_key(candidate.as_str()) {
                    found = Some(end);
                    break;
                }
            }
            let end = match found {
                Some(end) => end,
                None if self.char_fallback => start + 1,
                None => {
                    return Err(SubwordError::UnknownPiece {
                        word: word.to_string(),
                        position: start,
                    })
                }
            };
            let mut piece = String::new();
            if start > 0 {
                piece.push_str(CONTINUATION);
            }
            piece.extend(&chars[start..end]);
            pieces.push(piece);
            start = end;
        }
        Ok(pieces)
    }

    fn continuation_marker(&self) -> Option<&str> {
        Some(CONTINUATION)
    }
}
