use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::DatasetError;

/// Boundary indices over a word's characters. Cut `i` separates character
/// `i - 1` from character `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSegmentation")]
pub struct Segmentation {
    cuts: Vec<usize>,
    len: usize,
}

#[derive(Deserialize)]
struct RawSegmentation {
    cuts: Vec<usize>,
    len: usize,
}

impl TryFrom<RawSegmentation> for Segmentation {
    type Error = DatasetError;

    fn try_from(raw: RawSegmentation) -> Result<Self, Self::Error> {
        Segmentation::new(raw.cuts, raw.len)
    }
}

impl Segmentation {
    /// Cuts must be strictly increasing and inside `(0, len)`.
    pub fn new(cuts: Vec<usize>, len: usize) -> Result<Self, DatasetError> {
        for (i, &c) in cuts.iter().enumerate() {
            if c == 0 || c >= len {
                return Err(DatasetError::CutOutOfRange { cut: c, len });
            }
            if i > 0 && cuts[i - 1] >= c {
                return Err(DatasetError::CutsNotIncreasing);
            }
        }
        Ok(Segmentation { cuts, len })
    }

    /// Sorts and deduplicates before checking the range.
    pub fn from_unordered(mut cuts: Vec<usize>, len: usize) -> Result<Self, DatasetError> {
        cuts.sort_unstable();
        cuts.dedup();
        Segmentation::new(cuts, len)
    }

    pub(crate) fn from_sorted_unchecked(cuts: Vec<usize>, len: usize) -> Self {
        debug_assert!(cuts.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(cuts.iter().all(|&c| c > 0 && c < len));
        Segmentation { cuts, len }
    }

    /// Segmentation induced by consecutive piece lengths (in characters).
    pub fn from_piece_lengths<I: IntoIterator<Item = usize>>(lengths: I) -> Result<Self, DatasetError> {
        let mut cuts = Vec::new();
        let mut total = 0;
        for l in lengths {
            if l == 0 {
                return Err(DatasetError::EmptyPiece);
            }
            if total > 0 {
                cuts.push(total);
            }
            total += l;
        }
        Ok(Segmentation { cuts, len: total })
    }

    pub fn unsegmented(len: usize) -> Self {
        Segmentation { cuts: Vec::new(), len }
    }

    pub fn all_chars(len: usize) -> Self {
        Segmentation {
            cuts: (1..len).collect(),
            len,
        }
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// Word length in characters.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_segments(&self) -> usize {
        if self.len == 0 {
            0
        } else {
            self.cuts.len() + 1
        }
    }

    /// Character ranges of each segment, in order.
    pub fn segments(&self) -> Vec<Range<usize>> {
        if self.len == 0 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.cuts.len() + 1);
        let mut start = 0;
        for &c in &self.cuts {
            out.push(start..c);
            start = c;
        }
        out.push(start..self.len);
        out
    }

    /// Splits `word` into the segment strings.
    pub fn apply<'a>(&self, word: &'a str) -> Vec<&'a str> {
        let offsets: Vec<usize> = word
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(word.len()))
            .collect();
        self.segments()
            .into_iter()
            .map(|r| &word[offsets[r.start]..offsets[r.end]])
            .collect()
    }
}
