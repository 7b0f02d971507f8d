use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::RecoveryError;
use crate::dataset::{ComplexWordRecord, Label};

/// Shortest blend fragment that candidates are matched against.
pub const DEFAULT_MIN_OVERLAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateConfig {
    pub min_overlap: usize,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            min_overlap: DEFAULT_MIN_OVERLAP,
        }
    }
}

/// Lowercased, deduplicated word list with prefix and suffix lookup.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    /// Reversed words, sorted, each with its index into `words`.
    reversed: Vec<(String, usize)>,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut words: Vec<String> = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        words.sort_unstable();
        words.dedup();
        let mut reversed: Vec<(String, usize)> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.chars().rev().collect(), i))
            .collect();
        reversed.sort_unstable();
        Vocabulary { words, reversed }
    }

    /// First whitespace-separated token of every line. A leading
    /// `count dim` header, as in word2vec text files, is skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, RecoveryError> {
        let mut words = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut toks = line.split_whitespace();
            let Some(first) = toks.next() else { continue };
            if i == 0 && is_vector_header(&line) {
                continue;
            }
            words.push(first.to_string());
        }
        if words.is_empty() {
            return Err(RecoveryError::EmptyVocabulary);
        }
        Ok(Vocabulary::new(words))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.binary_search_by(|w| w.as_str().cmp(word)).is_ok()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let start = self.words.partition_point(|w| w.as_str() < prefix);
        self.words[start..]
            .iter()
            .take_while(move |w| w.starts_with(prefix))
            .map(String::as_str)
    }

    pub fn with_suffix<'a>(&'a self, suffix: &str) -> impl Iterator<Item = &'a str> + 'a {
        let rev: String = suffix.chars().rev().collect();
        let start = self.reversed.partition_point(|(r, _)| r.as_str() < rev.as_str());
        self.reversed[start..]
            .iter()
            .take_while(move |(r, _)| r.starts_with(rev.as_str()))
            .map(|&(_, i)| self.words[i].as_str())
    }
}

pub(crate) fn is_vector_header(line: &str) -> bool {
    let toks: Vec<&str> = line.split_whitespace().collect();
    toks.len() == 2 && toks.iter().all(|t| t.parse::<u64>().is_ok())
}

/// Candidate bases for one blend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub blend_id: String,
    pub surface: String,
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
    pub true_a: String,
    pub true_b: String,
    pub a_present: bool,
    pub b_present: bool,
}

impl CandidateSet {
    pub fn side(&self, side: super::Side) -> &[String] {
        match side {
            super::Side::A => &self.side_a,
            super::Side::B => &self.side_b,
        }
    }

    pub fn true_base(&self, side: super::Side) -> &str {
        match side {
            super::Side::A => &self.true_a,
            super::Side::B => &self.true_b,
        }
    }

    /// Every `(a, b)` pair in lexicographic order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::with_capacity(self.side_a.len() * self.side_b.len());
        for a in &self.side_a {
            for b in &self.side_b {
                out.push((a.clone(), b.clone()));
            }
        }
        out
    }
}

fn lower_chars(s: &str) -> Vec<char> {
    s.chars()
        .map(|c| {
            let mut l = c.to_lowercase();
            match (l.next(), l.next()) {
                (Some(x), None) => x,
                _ => c,
            }
        })
        .collect()
}

/// Matches the blend's leading A/X run as a prefix and its trailing run of
/// last-base/X material as a suffix. Runs shorter than `min_overlap`
/// contribute nothing. Prefix (suffix) material may optionally be kept in
/// front of (behind) the run, so `shoptics` matches both `optic` and
/// `optics`. Words sharing a stem with the true base are dropped, the blend
/// itself is never a candidate, and the true base is added whenever the
/// vocabulary has it.
pub fn generate_candidates(
    record: &ComplexWordRecord,
    vocab: &Vocabulary,
    config: CandidateConfig,
) -> Result<CandidateSet, RecoveryError> {
    let bases = record.bases();
    if bases.len() < 2 {
        return Err(RecoveryError::TooFewBases {
            id: record.id().to_string(),
            bases: bases.len(),
        });
    }
    let true_a = bases[0].to_lowercase();
    let true_b = bases[bases.len() - 1].to_lowercase();
    let last = (bases.len() - 1) as u8;
    let chars = lower_chars(record.surface());
    let labels = record.labeling().labels();
    let (start, end) = record.labeling().body_range();
    let surface: String = chars.iter().collect();

    let lead = labels[start..end]
        .iter()
        .take_while(|l| matches!(l, Label::Base(0) | Label::Shared))
        .count();
    let trail = labels[start..end]
        .iter()
        .rev()
        .take_while(|l| matches!(l, Label::Shared) || **l == Label::Base(last))
        .count();

    let mut side_a = BTreeSet::new();
    if lead >= config.min_overlap {
        let run: String = chars[start..start + lead].iter().collect();
        let with_prefix: String = chars[..start + lead].iter().collect();
        for pattern in [run, with_prefix] {
            side_a.extend(vocab.with_prefix(&pattern).map(str::to_string));
        }
    }
    let mut side_b = BTreeSet::new();
    if trail >= config.min_overlap {
        let run: String = chars[end - trail..end].iter().collect();
        let with_suffix: String = chars[end - trail..].iter().collect();
        for pattern in [run, with_suffix] {
            side_b.extend(vocab.with_suffix(&pattern).map(str::to_string));
        }
    }

    let finish = |mut set: BTreeSet<String>, truth: &str| -> (Vec<String>, bool) {
        let stem = porter_stemmer::stem(truth);
        set.retain(|c| c != &surface && (c == truth || porter_stemmer::stem(c) != stem));
        if vocab.contains(truth) {
            set.insert(truth.to_string());
        }
        let present = set.contains(truth);
        (set.into_iter().collect(), present)
    };
    let (side_a, a_present) = finish(side_a, &true_a);
    let (side_b, b_present) = finish(side_b, &true_b);
    Ok(CandidateSet {
        blend_id: record.id().to_string(),
        surface,
        side_a,
        side_b,
        true_a,
        true_b,
        a_present,
        b_present,
    })
}
