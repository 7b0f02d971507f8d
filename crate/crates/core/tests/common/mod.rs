//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use blendkit::dataset::{Label, PaxobsLabeling};
use blendkit::rankers::mlm::{BackendError, BackendInfo, MaskQuery, MlmBackend, PieceProbs};
use blendkit::recovery::CandidateSet;
use blendkit::segeval::SegScore;
use blendkit::subword::UnigramLmModel;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// ---- labelings -------------------------------------------------------------

/// A structurally valid labeling of length 1..=max_len: optional P run, a
/// body over A/B/C/X/O, optional S run.
pub fn random_labeling(rng: &mut impl Rng, max_len: usize) -> PaxobsLabeling {
    loop {
        let n = rng.gen_range(1..=max_len);
        let p = rng.gen_range(0..=n.min(2));
        let s = rng.gen_range(0..=(n - p).min(2));
        let body: String = (0..n - p - s)
            .map(|_| *b"AAABBBCXXO".choose(rng).unwrap() as char)
            .collect();
        let text = format!("{}{}{}", "P".repeat(p), body, "S".repeat(s));
        let lab: PaxobsLabeling = text.parse().unwrap();
        if lab.structural_violations().is_empty() {
            return lab;
        }
    }
}

pub fn all_cut_sets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    let inner = n.saturating_sub(1);
    (0u32..1 << inner).map(move |mask| (1..n).filter(|c| mask & (1 << (c - 1)) != 0).collect())
}

/// Scores a cut set straight from the rules: cuts touching affix material
/// are free; a cut between equal labels is a false positive; body segments
/// are judged by the base letters, X and O they contain.
pub fn seg_oracle(labels: &[Label], cuts: &[usize]) -> SegScore {
    let n = labels.len();
    let lead = labels.iter().take_while(|l| **l == Label::Prefix).count();
    let trail = labels.iter().rev().take_while(|l| **l == Label::Suffix).count();
    let (lo, hi) = if lead + trail >= n { (n, n) } else { (lead, n - trail) };

    let mut score = SegScore::default();
    let mut inner = Vec::new();
    for &c in cuts {
        if c > lo && c < hi {
            if labels[c - 1] == labels[c] {
                score.fp_cuts += 1;
            } else {
                score.tp_cuts += 1;
            }
            inner.push(c);
        }
    }
    if lo < hi {
        let mut bounds = vec![lo];
        bounds.extend(inner);
        bounds.push(hi);
        for w in bounds.windows(2) {
            let seg = &labels[w[0]..w[1]];
            let mut letters: Vec<u8> = seg.iter().filter_map(|l| l.base_index()).collect();
            letters.sort();
            letters.dedup();
            let has_base = !letters.is_empty();
            let has_xo = seg.iter().any(|l| matches!(l, Label::Shared | Label::Orphan));
            let lenient = letters.len() <= 1;
            let strict = lenient && !(has_base && has_xo);
            score.scored_segments += 1;
            score.sound_segments_lenient += lenient as usize;
            score.sound_segments_strict += strict as usize;
        }
    }
    score.exact_match_lenient = score.fp_cuts == 0 && score.sound_segments_lenient == score.scored_segments;
    score.exact_match_strict = score.fp_cuts == 0 && score.sound_segments_strict == score.scored_segments;
    score
}

// ---- strings ---------------------------------------------------------------

pub fn random_word(rng: &mut impl Rng, alphabet: &[char], min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// Levenshtein distance by plain recursion over the three edit operations.
pub fn edit_oracle(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = edit_oracle(ra, rb) + usize::from(x != y);
            let del = edit_oracle(ra, b) + 1;
            let ins = edit_oracle(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Best total log probability over every way of cutting `word` into
/// pieces, scoring unknown single characters with the model's penalty.
pub fn unigram_brute_force(model: &UnigramLmModel, word: &str) -> f64 {
    let chars: Vec<char> = word.chars().collect();
    all_cut_sets(chars.len())
        .map(|cuts| {
            let mut bounds = vec![0];
            bounds.extend(cuts);
            bounds.push(chars.len());
            bounds
                .windows(2)
                .map(|w| {
                    let piece: String = chars[w[0]..w[1]].iter().collect();
                    match model.log_prob(&piece) {
                        Some(lp) => lp,
                        None if w[1] - w[0] == 1 => model.unknown_score(),
                        None => f64::NEG_INFINITY,
                    }
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn piece_score(model: &UnigramLmModel, pieces: &[String]) -> f64 {
    pieces
        .iter()
        .map(|p| match model.log_prob(p) {
            Some(lp) => lp,
            None if p.chars().count() == 1 => model.unknown_score(),
            None => f64::NEG_INFINITY,
        })
        .sum()
}

// ---- masked LM -------------------------------------------------------------

/// Deterministic backend: words split into two-character pieces, and the
/// probability of a piece at a mask is a hash of the whole input, the mask
/// position and the piece, quantized to `levels` values so ties are common.
pub struct HashBackend {
    pub info: BackendInfo,
    pub levels: u64,
    pub scale: f64,
}

impl HashBackend {
    pub fn new(levels: u64) -> Self {
        HashBackend {
            info: BackendInfo {
                layers: 2,
                dim: 3,
                mask: "[MASK]".into(),
                cont_marker: "##".into(),
            },
            levels,
            scale: 1.0,
        }
    }

    pub fn pieces(word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        chars
            .chunks(2)
            .enumerate()
            .map(|(i, c)| {
                let s: String = c.iter().collect();
                if i == 0 {
                    s
                } else {
                    format!("##{s}")
                }
            })
            .collect()
    }

    pub fn prob(&self, tokens: &[String], mask_index: usize, piece: &str) -> f64 {
        let mut h = DefaultHasher::new();
        tokens.hash(&mut h);
        mask_index.hash(&mut h);
        piece.hash(&mut h);
        self.scale * (h.finish() % self.levels) as f64 / self.levels as f64
    }
}

impl MlmBackend for HashBackend {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn tokenize(&self, words: &[String]) -> Result<Vec<Vec<String>>, BackendError> {
        Ok(words.iter().map(|w| Self::pieces(w)).collect())
    }

    fn mask_probs(&self, tokens: &[String], query: &MaskQuery) -> Result<Vec<PieceProbs>, BackendError> {
        let MaskQuery::Pieces(wanted) = query else {
            return Err(BackendError::Protocol("expected a piece query".into()));
        };
        let masks = tokens.iter().filter(|t| **t == self.info.mask).count();
        Ok((0..masks)
            .map(|m| {
                wanted
                    .iter()
                    .map(|p| (p.clone(), self.prob(tokens, m, p)))
                    .collect::<HashMap<_, _>>()
            })
            .collect())
    }

    fn encode_layers(&self, tokens: &[String]) -> Result<Vec<Vec<Vec<f32>>>, BackendError> {
        Ok((0..self.info.layers)
            .map(|l| {
                tokens
                    .iter()
                    .map(|t| {
                        let mut h = DefaultHasher::new();
                        (l, t).hash(&mut h);
                        let x = h.finish();
                        (0..self.info.dim)
                            .map(|k| ((x >> (8 * k)) & 0xff) as f32 / 255.0 - 0.5)
                            .collect()
                    })
                    .collect()
            })
            .collect())
    }
}

/// How a pair stands at one depth of the expansion.
#[derive(Debug, Clone, PartialEq)]
enum Step {
    AEnded,
    BEnded,
    Scored(f64, String, String),
}

/// The full expansion of one pair: a step per depth until a side runs out.
fn expand(be: &HashBackend, a: &str, b: &str, left: &[String], right: &[String]) -> Vec<Step> {
    let (pa, pb) = (HashBackend::pieces(a), HashBackend::pieces(b));
    let mut steps = Vec::new();
    for d in 0.. {
        if pa.len() <= d {
            steps.push(Step::AEnded);
            break;
        }
        if pb.len() <= d {
            steps.push(Step::BEnded);
            break;
        }
        let mut t = left.to_vec();
        t.extend_from_slice(&pa[..d]);
        t.push(be.info.mask.clone());
        t.extend_from_slice(&pb[..d]);
        t.push(be.info.mask.clone());
        t.extend_from_slice(right);
        let s = be.prob(&t, 0, &pa[d]) + be.prob(&t, 1, &pb[d]);
        steps.push(Step::Scored(s, pa[d].clone(), pb[d].clone()));
    }
    steps
}

fn cmp_steps(x: &Step, y: &Step) -> Ordering {
    let rank = |s: &Step| match s {
        Step::AEnded => 0,
        Step::BEnded => 1,
        Step::Scored(..) => 2,
    };
    match (x, y) {
        (Step::Scored(s1, a1, b1), Step::Scored(s2, a2, b2)) => s2.total_cmp(s1).then_with(|| (a1, b1).cmp(&(a2, b2))),
        _ => rank(x).cmp(&rank(y)),
    }
}

/// Sorts every pair by comparing expansions depth by depth; pairs that end
/// the same way at the same depth fall back to lexicographic order.
pub fn mlm_pair_oracle(
    be: &HashBackend,
    cands: &CandidateSet,
    left: &[String],
    right: &[String],
) -> Vec<(String, String)> {
    let mut keyed: Vec<((String, String), Vec<Step>)> = cands
        .pairs()
        .into_iter()
        .map(|(a, b)| {
            let e = expand(be, &a, &b, left, right);
            ((a, b), e)
        })
        .collect();
    keyed.sort_by(|(p, e1), (q, e2)| {
        for (x, y) in e1.iter().zip(e2) {
            match cmp_steps(x, y) {
                Ordering::Equal if matches!(x, Step::Scored(..)) => continue,
                Ordering::Equal => return p.cmp(q),
                o => return o,
            }
        }
        p.cmp(q)
    });
    keyed.into_iter().map(|(p, _)| p).collect()
}

/// Random candidate set over a small alphabet so words share leading pieces.
pub fn random_candidates<R: Rng>(rng: &mut R, id: usize, max_pairs: usize) -> CandidateSet {
    let alphabet = ['a', 'b'];
    loop {
        let side = |rng: &mut R, n: usize| {
            let mut v: Vec<String> = (0..n).map(|_| random_word(rng, &alphabet, 1, 6)).collect();
            v.sort();
            v.dedup();
            v
        };
        let na = rng.gen_range(1..=5);
        let nb = rng.gen_range(1..=5);
        let (a, b) = (side(rng, na), side(rng, nb));
        if a.len() * b.len() > max_pairs {
            continue;
        }
        let ta = a[rng.gen_range(0..a.len())].clone();
        let tb = b[rng.gen_range(0..b.len())].clone();
        return CandidateSet {
            blend_id: format!("w{id}"),
            surface: format!("w{id}"),
            side_a: a,
            side_b: b,
            true_a: ta,
            true_b: tb,
            a_present: true,
            b_present: true,
        };
    }
}

// ---- tagger ------------------------------------------------------------------

pub const TAGGER_TRAIN: [(&str, &str); 10] = [
    ("brunch", "AABBBB"),
    ("smog", "AAXB"),
    ("motel", "AXXBB"),
    ("spork", "AAXBB"),
    ("hatriotism", "AXXBBBBSSS"),
    ("shoptics", "AAXXBBBS"),
    ("sitcom", "AAABBB"),
    ("brexit", "AABBBB"),
    ("frenemy", "AAXXBBB"),
    ("unbrunchable", "PPAABBBBSSSS"),
];
