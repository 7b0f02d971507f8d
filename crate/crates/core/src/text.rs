//! Small text helpers shared by the corpus, ranking and probing code.

use std::ops::Range;

use unicode_normalization::UnicodeNormalization;

/// Text normalization applied before tokenizer training and encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Normalizer {
    pub lowercase: bool,
    pub nfc: bool,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            lowercase: true,
            nfc: true,
        }
    }
}

impl Normalizer {
    pub const IDENTITY: Normalizer = Normalizer {
        lowercase: false,
        nfc: false,
    };

    pub fn apply(&self, s: &str) -> String {
        let composed: String = if self.nfc { s.nfc().collect() } else { s.to_string() };
        if self.lowercase {
            composed.to_lowercase()
        } else {
            composed
        }
    }
}

/// Splits on every non-alphanumeric character, dropping empty pieces.
pub fn word_tokens(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

/// Byte range of the first case-insensitive whole-token occurrence of
/// `needle` in `haystack`.
pub fn find_whole_token(haystack: &str, needle: &str) -> Option<Range<usize>> {
    let target: Vec<char> = needle.chars().flat_map(char::to_lowercase).collect();
    if target.is_empty() {
        return None;
    }
    let chars: Vec<(usize, char)> = haystack.char_indices().collect();
    for start in 0..chars.len() {
        if start > 0 && chars[start - 1].1.is_alphanumeric() {
            continue;
        }
        let mut matched = 0;
        let mut pos = start;
        while matched < target.len() && pos < chars.len() {
            let lowered: Vec<char> = chars[pos].1.to_lowercase().collect();
            if target.len() - matched < lowered.len() || target[matched..matched + lowered.len()] != lowered[..] {
                break;
            }
            matched += lowered.len();
            pos += 1;
        }
        if matched != target.len() {
            continue;
        }
        if pos < chars.len() && chars[pos].1.is_alphanumeric() {
            continue;
        }
        let end = chars.get(pos).map_or(haystack.len(), |&(b, _)| b);
        return Some(chars[start].0..end);
    }
    None
}

/// Text before and after the first whole-token occurrence of `word`.
pub fn split_around<'a>(context: &'a str, word: &str) -> Option<(&'a str, &'a str)> {
    let span = find_whole_token(context, word)?;
    Some((&context[..span.start], &context[span.end..]))
}
