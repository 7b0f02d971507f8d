//! One interface over every segmentation system.

use crate::dataset::Segmentation;
use crate::subword::{pieces_to_segmentation, SubwordError, SubwordModel};
use crate::tagger::{all_chars_segmenter, TaggerModel};

pub trait Segmenter: Sync {
    fn name(&self) -> &str;
    fn segment(&self, word: &str) -> Result<Segmentation, SubwordError>;
}

/// Every character is its own segment.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllChars;

impl Segmenter for AllChars {
    fn name(&self) -> &str {
        "allchars"
    }

    fn segment(&self, word: &str) -> Result<Segmentation, SubwordError> {
        Ok(all_chars_segmenter(word))
    }
}

impl Segmenter for TaggerModel {
    fn name(&self) -> &str {
        "tagger"
    }

    fn segment(&self, word: &str) -> Result<Segmentation, SubwordError> {
        Ok(TaggerModel::segment(self, word))
    }
}

/// Cuts a word where a subword model's pieces meet.
#[derive(Debug, Clone)]
pub struct SubwordSegmenter<M> {
    name: String,
    model: M,
}

impl<M: SubwordModel> SubwordSegmenter<M> {
    pub fn new(name: impl Into<String>, model: M) -> Self {
        SubwordSegmenter {
            name: name.into(),
            model,
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: SubwordModel + Sync> Segmenter for SubwordSegmenter<M> {
    fn name(&self) -> &str {
        &self.name
    }

    fn segment(&self, word: &str) -> Result<Segmentation, SubwordError> {
        if word.is_empty() {
            return Ok(Segmentation::unsegmented(0));
        }
        let pieces = self.model.encode(word)?;
        pieces_to_segmentation(word, &pieces, self.model.continuation_marker())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subword::{BpeModel, WordPieceVocab};

    #[test]
    fn adapters() {
        assert_eq!(AllChars.segment("abc").unwrap().cuts(), &[1, 2]);
        let wp = SubwordSegmenter::new("wordpiece", WordPieceVocab::new(["male", "males", "##tream"]));
        assert_eq!(wp.segment("malestream").unwrap().cuts(), &[5]);
        let bpe = SubwordSegmenter::new(
            "bpe",
            BpeModel::from_merges(
                vec![("l".into(), "o".into()), ("lo".into(), "w".into())],
                "lowest".chars(),
            ),
        );
        assert_eq!(bpe.segment("lowest").unwrap().cuts(), &[3, 4, 5]);
        assert_eq!(bpe.name(), "bpe");
    }
}
