//! Segmentation metrics over PAXOBS labelings.
//!
//! A predicted cut separating two characters with the same label is a false
//! positive; any other cut inside the word body is a true positive. Cuts
//! touching prefix or suffix material are free. After merging affixes into
//! the adjacent body segment, each body segment is judged *leniently sound*
//! if it holds exclusive material of at most one base, and *strictly sound*
//! if in addition it holds no `X` or `O` alongside base material.
//! Recall is the fraction of scored segments that are sound.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Label, PaxobsLabeling, Segmentation};

/// Longest word [`oracle_best_match`] will enumerate.
pub const ORACLE_MAX_LEN: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegEvalError {
    #[error("segmentation covers {seg} characters, labeling has {labels}")]
    LengthMismatch { seg: usize, labels: usize },
    #[error("cannot aggregate an empty list of scores")]
    Empty,
    #[error("word of length {0} is too long to enumerate (max {ORACLE_MAX_LEN})")]
    TooLong(usize),
}

/// Per-word counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegScore {
    pub tp_cuts: usize,
    pub fp_cuts: usize,
    pub sound_segments_lenient: usize,
    pub sound_segments_strict: usize,
    pub scored_segments: usize,
    pub exact_match_lenient: bool,
    pub exact_match_strict: bool,
}

pub fn score_segmentation(labeling: &PaxobsLabeling, predicted: &Segmentation) -> Result<SegScore, SegEvalError> {
    let labels = labeling.labels();
    if predicted.len() != labels.len() {
        return Err(SegEvalError::LengthMismatch {
            seg: predicted.len(),
            labels: labels.len(),
        });
    }
    let (body_start, body_end) = labeling.body_range();

    let mut score = SegScore::default();
    let mut body_cuts = Vec::new();
    for &c in predicted.cuts() {
        if c <= body_start || c >= body_end {
            continue;
        }
        if labels[c - 1] == labels[c] {
            score.fp_cuts += 1;
        } else {
            score.tp_cuts += 1;
        }
        body_cuts.push(c);
    }

    if body_start < body_end {
        let mut start = body_start;
        for end in body_cuts.into_iter().chain(std::iter::once(body_end)) {
            let (lenient, strict) = segment_soundness(&labels[start..end]);
            score.scored_segments += 1;
            score.sound_segments_lenient += usize::from(lenient);
            score.sound_segments_strict += usize::from(strict);
            start = end;
        }
    }

    score.exact_match_lenient = score.fp_cuts == 0 && score.sound_segments_lenient == score.scored_segments;
    score.exact_match_strict = score.fp_cuts == 0 && score.sound_segments_strict == score.scored_segments;
    Ok(score)
}

/// (lenient, strict) soundness of one body segment.
fn segment_soundness(segment: &[Label]) -> (bool, bool) {
    let mut bases = BTreeSet::new();
    let mut shared = false;
    let mut orphan = false;
    for l in segment {
        match l {
            Label::Base(b) => {
                bases.insert(*b);
            }
            Label::Shared => shared = true,
            Label::Orphan => orphan = true,
            Label::Prefix | Label::Suffix => {}
        }
    }
    let lenient = bases.len() <= 1;
    let strict = lenient && !((shared || orphan) && !bases.is_empty());
    (lenient, strict)
}

impl Add for SegScore {
    type Output = SegScore;

    /// Sums counts; exact-match flags hold only if both hold.
    fn add(self, o: SegScore) -> SegScore {
        SegScore {
            tp_cuts: self.tp_cuts + o.tp_cuts,
            fp_cuts: self.fp_cuts + o.fp_cuts,
            sound_segments_lenient: self.sound_segments_lenient + o.sound_segments_lenient,
            sound_segments_strict: self.sound_segments_strict + o.sound_segments_strict,
            scored_segments: self.scored_segments + o.scored_segments,
            exact_match_lenient: self.exact_match_lenient && o.exact_match_lenient,
            exact_match_strict: self.exact_match_strict && o.exact_match_strict,
        }
    }
}

impl AddAssign for SegScore {
    fn add_assign(&mut self, o: SegScore) {
        *self = *self + o;
    }
}

/// Micro-aggregated metrics in the layout of a segmentation results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub n: usize,
    pub mean_segments: f64,
    pub precision: f64,
    pub lenient_recall: f64,
    pub strict_recall: f64,
    pub lenient_f1: f64,
    pub strict_f1: f64,
    pub lenient_em_rate: f64,
    pub strict_em_rate: f64,
}

/// Precision is 1.0 when no non-free cut was predicted; recall is 1.0 when
/// there are no scored segments.
pub fn aggregate(scores: &[SegScore]) -> Result<SegMetrics, SegEvalError> {
    if scores.is_empty() {
        return Err(SegEvalError::Empty);
    }
    let n = scores.len();
    let mut tp = 0;
    let mut fp = 0;
    let mut sound_l = 0;
    let mut sound_s = 0;
    let mut scored = 0;
    let mut em_l = 0;
    let mut em_s = 0;
    for s in scores {
        tp += s.tp_cuts;
        fp += s.fp_cuts;
        sound_l += s.sound_segments_lenient;
        sound_s += s.sound_segments_strict;
        scored += s.scored_segments;
        em_l += usize::from(s.exact_match_lenient);
        em_s += usize::from(s.exact_match_strict);
    }
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let lenient_recall = ratio(sound_l, scored);
    let strict_recall = ratio(sound_s, scored);
    Ok(SegMetrics {
        n,
        mean_segments: scored as f64 / n as f64,
        precision,
        lenient_recall,
        strict_recall,
        lenient_f1: f1(precision, lenient_recall),
        strict_f1: f1(precision, strict_recall),
        lenient_em_rate: em_l as f64 / n as f64,
        strict_em_rate: em_s as f64 / n as f64,
    })
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Every segmentation of the word that is a lenient exact match, in
/// increasing order of the cut bitmask.
pub fn oracle_best_match(labeling: &PaxobsLabeling) -> Result<Vec<Segmentation>, SegEvalError> {
    let n = labeling.len();
    if n > ORACLE_MAX_LEN {
        return Err(SegEvalError::TooLong(n));
    }
    if n == 0 {
        return Ok(vec![Segmentation::unsegmented(0)]);
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let cuts: Vec<usize> = (1..n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        let seg = Segmentation::new(cuts, n).expect("cuts in range by construction");
        if score_segmentation(labeling, &seg)?.exact_match_lenient {
            out.push(seg);
        }
    }
    Ok(out)
}

/// One row of a results table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegTableRow {
    pub model: String,
    #[serde(flatten)]
    pub metrics: SegMetrics,
}

/// Tab-separated table: `#segs`, `Prec.`, `L F1`, `S F1`, `L EM`, `S EM`.
pub fn format_table_tsv(rows: &[SegTableRow]) -> String {
    let mut out = String::from("Model\tN\t#segs\tPrec.\tL F1\tS F1\tL EM\tS EM\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{}\t{}\t{:.2}\t{:.3}\t{:.3}\t{:.3}\t{:.1}%\t{:.1}%",
            r.model,
            m.n,
            m.mean_segments,
            m.precision,
            m.lenient_f1,
            m.strict_f1,
            100.0 * m.lenient_em_rate,
            100.0 * m.strict_em_rate
        );
    }
    out
}
