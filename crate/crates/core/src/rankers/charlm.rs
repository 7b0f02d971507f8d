use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sort_with_ties;
use crate::recovery::{CandidateSet, Ranking, Side};

pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_SMOOTHING: f64 = 0.01;

const BOS: char = '\u{2}';
const END: char = '\u{3}';
const UNK: char = '\u{1}';

#[derive(Debug, Error)]
pub enum CharLmError {
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("smoothing constant must be positive and finite, got {0}")]
    BadSmoothing(f64),
    #[error("{0} LM given where a {1} LM is needed")]
    WrongDirection(Direction, Direction),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// Character n-gram model with add-k smoothing over the training alphabet
/// plus an end symbol and an unknown-character symbol. A backward model
/// reads text right to left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LmFile", into = "LmFile")]
pub struct CharNgramLm {
    order: usize,
    k: f64,
    direction: Direction,
    alphabet: BTreeSet<char>,
    counts: HashMap<String, HashMap<char, u64>>,
    totals: HashMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct LmFile {
    order: usize,
    k: f64,
    direction: Direction,
    alphabet: String,
    counts: BTreeMap<String, BTreeMap<String, u64>>,
}

impl TryFrom<LmFile> for CharNgramLm {
    type Error = CharLmError;

    fn try_from(f: LmFile) -> Result<Self, CharLmError> {
        let mut lm = CharNgramLm::new(f.order, f.k, f.direction)?;
        lm.alphabet = f.alphabet.chars().collect();
        for (ctx, next) in f.counts {
            let mut row = HashMap::new();
            for (c, n) in next {
                let mut it = c.chars();
                if let (Some(ch), None) = (it.next(), it.next()) {
                    row.insert(ch, n);
                }
            }
            lm.totals.insert(ctx.clone(), row.values().sum());
            lm.counts.insert(ctx, row);
        }
        Ok(lm)
    }
}

impl From<CharNgramLm> for LmFile {
    fn from(lm: CharNgramLm) -> Self {
        LmFile {
            order: lm.order,
            k: lm.k,
            direction: lm.direction,
            alphabet: lm.alphabet.iter().collect(),
            counts: lm
                .counts
                .into_iter()
                .map(|(ctx, row)| (ctx, row.into_iter().map(|(c, n)| (c.to_string(), n)).collect()))
                .collect(),
        }
    }
}

impl CharNgramLm {
    /// An untrained model, which is uniform over its symbols.
    pub fn new(order: usize, k: f64, direction: Direction) -> Result<Self, CharLmError> {
        if order == 0 {
            return Err(CharLmError::ZeroOrder);
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(CharLmError::BadSmoothing(k));
        }
        Ok(CharNgramLm {
            order,
            k,
            direction,
            alphabet: BTreeSet::new(),
            counts: HashMap::new(),
            totals: HashMap::new(),
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn oriented(&self, s: &str) -> Vec<char> {
        match self.direction {
            Direction::Forward => s.chars().collect(),
            Direction::Backward => s.chars().rev().collect(),
        }
    }

    fn context_key(&self, history: &[char]) -> String {
        let want = self.order - 1;
        let have = history.len().min(want);
        let mut key: String = std::iter::repeat_n(BOS, want - have).collect();
        key.extend(history[history.len() - have..].iter().map(|&c| self.symbol(c)));
        key
    }

    fn symbol(&self, c: char) -> char {
        if c == BOS || c == END || self.alphabet.contains(&c) {
            c
        } else {
            UNK
        }
    }

    /// Adds one line of text (a sentence) to the counts.
    pub fn train_line(&mut self, line: &str) {
        let seq = self.oriented(line);
        if seq.is_empty() {
            return;
        }
        self.alphabet
            .extend(seq.iter().copied().filter(|&c| c != BOS && c != END && c != UNK));
        for i in 0..=seq.len() {
            let key = self.context_key(&seq[..i]);
            let next = if i == seq.len() { END } else { seq[i] };
            *self.counts.entry(key.clone()).or_default().entry(next).or_insert(0) += 1;
            *self.totals.entry(key).or_insert(0) += 1;
        }
    }

    /// Symbols the distribution ranges over: alphabet, end and unknown.
    pub fn num_symbols(&self) -> usize {
        self.alphabet.len() + 2
    }

    fn log_prob_at(&self, history: &[char], next: char) -> f64 {
        let key = self.context_key(history);
        let next = self.symbol(next);
        let count = self.counts.get(&key).and_then(|r| r.get(&next)).copied().unwrap_or(0);
        let total = self.totals.get(&key).copied().unwrap_or(0);
        ((count as f64 + self.k) / (total as f64 + self.k * self.num_symbols() as f64)).ln()
    }

    /// Mean log probability per character of `continuation` following
    /// `history`, both given in reading order. A backward model scores
    /// `continuation` right to left, preceded by `history` reversed. An
    /// empty continuation scores 0.
    pub fn mean_log_likelihood(&self, history: &str, continuation: &str) -> f64 {
        let (mut seq, cont) = match self.direction {
            Direction::Forward => (
                history.chars().collect::<Vec<_>>(),
                continuation.chars().collect::<Vec<_>>(),
            ),
            Direction::Backward => (history.chars().rev().collect(), continuation.chars().rev().collect()),
        };
        if cont.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for &c in &cont {
            total += self.log_prob_at(&seq, c);
            seq.push(c);
        }
        total / cont.len() as f64
    }

    /// Probabilities of every symbol after `history`; used to check
    /// normalization.
    #[cfg(test)]
    fn distribution(&self, history: &str) -> Vec<f64> {
        let h = self.oriented(history);
        let mut syms: Vec<char> = self.alphabet.iter().copied().collect();
        syms.push(END);
        syms.push(UNK);
        syms.into_iter().map(|c| self.log_prob_at(&h, c).exp()).collect()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), CharLmError> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, CharLmError> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Side A candidates scored by the forward model continuing the left
/// context; side B candidates by the backward model continuing the right
/// context. Higher mean log likelihood ranks first.
pub fn rank_by_char_lm(
    cands: &CandidateSet,
    forward: &CharNgramLm,
    backward: &CharNgramLm,
    left: &str,
    right: &str,
) -> Result<Ranking, CharLmError> {
    if forward.direction != Direction::Forward {
        return Err(CharLmError::WrongDirection(forward.direction, Direction::Forward));
    }
    if backward.direction != Direction::Backward {
        return Err(CharLmError::WrongDirection(backward.direction, Direction::Backward));
    }
    let by = |side: Side, lm: &CharNgramLm, history: &str| {
        sort_with_ties(
            cands.side(side).to_vec(),
            |c| lm.mean_log_likelihood(history, c),
            |a: &f64, b: &f64| b.total_cmp(a),
        )
    };
    Ok(Ranking {
        blend_id: cands.blend_id.clone(),
        pairs: None,
        side_a: Some(by(Side::A, forward, left)),
        side_b: Some(by(Side::B, backward, right)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(a: &[&str], b: &[&str]) -> CandidateSet {
        let v = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        CandidateSet {
            blend_id: "t".into(),
            surface: "t".into(),
            side_a: v(a),
            side_b: v(b),
            true_a: a.first().unwrap_or(&"").to_string(),
            true_b: b.first().unwrap_or(&"").to_string(),
            a_present: true,
            b_present: true,
        }
    }

    #[test]
    fn untrained_ties_are_lexicographic() {
        let f = CharNgramLm::new(3, 1.0, Direction::Forward).unwrap();
        let b = CharNgramLm::new(3, 1.0, Direction::Backward).unwrap();
        let r = rank_by_char_lm(&cands(&["zz", "ab", "m"], &["q", "c"]), &f, &b, "the ", " is").unwrap();
        assert_eq!(r.side_a.unwrap(), vec!["ab", "m", "zz"]);
        assert_eq!(r.side_b.unwrap(), vec!["c", "q"]);
    }

    #[test]
    fn learned_continuation_preferred() {
        let mut f = CharNgramLm::new(3, 0.01, Direction::Forward).unwrap();
        f.train_line("abababababab");
        assert!(f.mean_log_likelihood("abab", "ab") > f.mean_log_likelihood("abab", "ba"));
        let b = CharNgramLm::new(3, 0.01, Direction::Backward).unwrap();
        let r = rank_by_char_lm(&cands(&["ba", "ab"], &[]), &f, &b, "abab", "").unwrap();
        assert_eq!(r.side_a.unwrap(), vec!["ab", "ba"]);
    }

    #[test]
    fn backward_reads_right_context() {
        let mut b = CharNgramLm::new(2, 0.01, Direction::Backward).unwrap();
        b.train_line("xa xa xa xa");
        // right-to-left, "a" is followed by "x"; a candidate ending in "x"
        // before a right context starting with "a" is likely
        assert!(b.mean_log_likelihood("a", "x") > b.mean_log_likelihood("a", "a"));
    }

    #[test]
    fn single_char_equals_its_log_prob() {
        let mut f = CharNgramLm::new(2, 0.5, Direction::Forward).unwrap();
        f.train_line("abc");
        // context "a" seen once, followed by "b"; 5 symbols (a b c end unk)
        let expected = ((1.0 + 0.5) / (1.0 + 0.5 * 5.0_f64)).ln();
        assert!((f.mean_log_likelihood("a", "b") - expected).abs() < 1e-12);
    }

    #[test]
    fn distributions_normalize() {
        let mut f = CharNgramLm::new(4, 0.01, Direction::Forward).unwrap();
        f.train_line("the cat sat on the mat");
        f.train_line("a hat");
        for h in ["", "th", "the c", "zzz", "at"] {
            let s: f64 = f.distribution(h).iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "{h}: {s}");
        }
        // unseen characters still get a finite score
        assert!(f.mean_log_likelihood("the ", "qüx").is_finite());
    }

    #[test]
    fn json_round_trip_and_config_checks() {
        let mut f = CharNgramLm::new(3, 0.01, Direction::Backward).unwrap();
        f.train_line("héllo world");
        let mut buf = Vec::new();
        f.write_json(&mut buf).unwrap();
        assert_eq!(CharNgramLm::read_json(buf.as_slice()).unwrap(), f);
        assert!(CharNgramLm::new(0, 0.01, Direction::Forward).is_err());
        assert!(CharNgramLm::new(3, 0.0, Direction::Forward).is_err());
        let fw = CharNgramLm::new(3, 0.01, Direction::Forward).unwrap();
        assert!(rank_by_char_lm(&cands(&[], &[]), &f, &fw, "", "").is_err());
    }
}
