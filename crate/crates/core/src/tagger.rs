//! Character-level PAXOBS tagger (averaged structured perceptron) and the
//! all-chars baseline segmenter.
//!
//! Each character is described by the character n-grams (n <= 3) that fit in
//! a window of three characters on either side, plus a bias. Decoding is
//! first-order Viterbi. Among equal scores the earlier label in the order
//! `P < A < X < O < B < C < ... < S` wins, so the zero model tags every
//! character with the first label.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Label, PaxobsLabeling, Segmentation};

pub const DEFAULT_EPOCHS: usize = 30;
pub const DEFAULT_SEED: u64 = 13;

const WINDOW: isize = 3;
const MAX_NGRAM: isize = 3;
const PAD_LEFT: char = '\u{2}';
const PAD_RIGHT: char = '\u{3}';

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("epochs must be at least 1")]
    ZeroEpochs,
    #[error("{word:?} has {chars} characters but {labels} labels")]
    LengthMismatch { word: String, chars: usize, labels: usize },
    #[error("model file: {0}")]
    BadModel(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggerConfig {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            epochs: DEFAULT_EPOCHS,
            seed: DEFAULT_SEED,
        }
    }
}

/// Position of a label in the decoding tie order.
fn tie_rank(l: Label) -> (u8, u8) {
    match l {
        Label::Prefix => (0, 0),
        Label::Base(0) => (1, 0),
        Label::Shared => (2, 0),
        Label::Orphan => (3, 0),
        Label::Base(b) => (4, b),
        Label::Suffix => (5, 0),
    }
}

/// Trained weights. Labels are kept in tie order.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    labels: Vec<Label>,
    features: HashMap<String, Vec<f64>>,
    /// `transitions[prev][next]`
    transitions: Vec<Vec<f64>>,
    start: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    labels: String,
    features: BTreeMap<String, Vec<f64>>,
    transitions: Vec<Vec<f64>>,
    start: Vec<f64>,
}

fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Feature strings for every character of `word`.
fn word_features(word: &str) -> Vec<Vec<String>> {
    let chars: Vec<char> = word.chars().map(fold_char).collect();
    let n = chars.len() as isize;
    let at = |i: isize| -> char {
        if i < 0 {
            PAD_LEFT
        } else if i >= n {
            PAD_RIGHT
        } else {
            chars[i as usize]
        }
    };
    (0..n)
        .map(|i| {
            let mut feats = vec!["bias".to_string()];
            for len in 1..=MAX_NGRAM {
                for off in -WINDOW..=WINDOW - len + 1 {
                    let gram: String = (off..off + len).map(|k| at(i + k)).collect();
                    feats.push(format!("{off}/{gram}"));
                }
            }
            feats
        })
        .collect()
}

impl TaggerModel {
    /// A model with every weight zero.
    pub fn zero(mut labels: Vec<Label>) -> Self {
        labels.sort_by_key(|&l| tie_rank(l));
        labels.dedup();
        let k = labels.len();
        TaggerModel {
            labels,
            features: HashMap::new(),
            transitions: vec![vec![0.0; k]; k],
            start: vec![0.0; k],
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn emissions(&self, word: &str) -> Vec<Vec<f64>> {
        let k = self.labels.len();
        word_features(word)
            .iter()
            .map(|feats| {
                let mut e = vec![0.0; k];
                for f in feats {
                    if let Some(w) = self.features.get(f) {
                        for (ey, wy) in e.iter_mut().zip(w) {
                            *ey += wy;
                        }
                    }
                }
                e
            })
            .collect()
    }

    /// Viterbi-optimal labels, one per character.
    pub fn tag(&self, word: &str) -> PaxobsLabeling {
        let idx = viterbi(&self.emissions(word), &self.transitions, &self.start);
        PaxobsLabeling::new(idx.into_iter().map(|i| self.labels[i]).collect())
    }

    /// Tags `word` and cuts at every label change.
    pub fn segment(&self, word: &str) -> Segmentation {
        self.tag(word).gold_segmentation()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), TaggerError> {
        let file = ModelFile {
            labels: self.labels.iter().map(|l| l.to_char()).collect(),
            features: self.features.iter().map(|(f, w)| (f.clone(), w.clone())).collect(),
            transitions: self.transitions.clone(),
            start: self.start.clone(),
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, TaggerError> {
        let file: ModelFile = serde_json::from_reader(r)?;
        let labels = file
            .labels
            .chars()
            .map(|c| Label::from_char(c).ok_or_else(|| TaggerError::BadModel(format!("label {c:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let k = labels.len();
        let mut sorted = labels.clone();
        sorted.sort_by_key(|&l| tie_rank(l));
        sorted.dedup();
        if sorted != labels || k == 0 {
            return Err(TaggerError::BadModel("labels must be distinct and in tie order".into()));
        }
        let shapes_ok = file.start.len() == k
            && file.transitions.len() == k
            && file.transitions.iter().all(|r| r.len() == k)
            && file.features.values().all(|w| w.len() == k);
        if !shapes_ok {
            return Err(TaggerError::BadModel("weight shapes do not match the label set".into()));
        }
        let finite = file
            .start
            .iter()
            .chain(file.transitions.iter().flatten())
            .chain(file.features.values().flatten());
        if !finite.into_iter().all(|x| x.is_finite()) {
            return Err(TaggerError::BadModel("non-finite weight".into()));
        }
        Ok(TaggerModel {
            labels,
            features: file.features.into_iter().collect(),
            transitions: file.transitions,
            start: file.start,
        })
    }
}

fn viterbi(emissions: &[Vec<f64>], trans: &[Vec<f64>], start: &[f64]) -> Vec<usize> {
    let n = emissions.len();
    if n == 0 {
        return Vec::new();
    }
    let k = start.len();
    let mut score: Vec<f64> = (0..k).map(|y| start[y] + emissions[0][y]).collect();
    let mut back = vec![vec![0usize; k]; n];
    for i in 1..n {
        let mut next = vec![f64::NEG_INFINITY; k];
        for y in 0..k {
            for p in 0..k {
                let s = score[p] + trans[p][y];
                if s > next[y] {
                    next[y] = s;
                    back[i][y] = p;
                }
            }
            next[y] += emissions[i][y];
        }
        score = next;
    }
    let mut best = 0;
    for y in 1..k {
        if score[y] > score[best] {
            best = y;
        }
    }
    let mut out = vec![0; n];
    out[n - 1] = best;
    for i in (1..n).rev() {
        out[i - 1] = back[i][out[i]];
    }
    out
}

/// Weight vector with the running sums needed for averaging: the averaged
/// weight is `w - u / c` where `u` accumulates `c * delta`.
struct Averaged {
    w: Vec<f64>,
    u: Vec<f64>,
}

impl Averaged {
    fn new(len: usize) -> Self {
        Averaged {
            w: vec![0.0; len],
            u: vec![0.0; len],
        }
    }

    fn update(&mut self, i: usize, delta: f64, c: f64) {
        self.w[i] += delta;
        self.u[i] += c * delta;
    }

    fn finish(&self, c: f64) -> Vec<f64> {
        self.w.iter().zip(&self.u).map(|(w, u)| w - u / c).collect()
    }
}

/// Trains on `(word, labeling)` pairs, visiting them in a seeded random
/// order each epoch.
pub fn train_tagger(examples: &[(String, PaxobsLabeling)], config: TaggerConfig) -> Result<TaggerModel, TaggerError> {
    if examples.is_empty() {
        return Err(TaggerError::EmptyTrainingSet);
    }
    if config.epochs == 0 {
        return Err(TaggerError::ZeroEpochs);
    }
    for (w, l) in examples {
        let chars = w.chars().count();
        if chars != l.len() {
            return Err(TaggerError::LengthMismatch {
                word: w.clone(),
                chars,
                labels: l.len(),
            });
        }
    }

    let labels: Vec<Label> = examples.iter().flat_map(|(_, l)| l.labels().iter().copied()).collect();
    let template = TaggerModel::zero(labels);
    let k = template.labels.len();
    let label_id: HashMap<Label, usize> = template.labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    // Intern features so the training loop works on dense ids.
    let mut feature_id: HashMap<String, usize> = HashMap::new();
    let data: Vec<(Vec<Vec<usize>>, Vec<usize>)> = examples
        .iter()
        .map(|(w, l)| {
            let feats = word_features(w)
                .into_iter()
                .map(|fs| {
                    fs.into_iter()
                        .map(|f| {
                            let next = feature_id.len();
                            *feature_id.entry(f).or_insert(next)
                        })
                        .collect()
                })
                .collect();
            let gold = l.labels().iter().map(|x| label_id[x]).collect();
            (feats, gold)
        })
        .collect();

    let mut emit = Averaged::new(feature_id.len() * k);
    let mut trans = Averaged::new(k * k);
    let mut start = Averaged::new(k);
    let mut c = 1.0;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &ix in &order {
            let (feats, gold) = &data[ix];
            let emissions: Vec<Vec<f64>> = feats
                .iter()
                .map(|fs| {
                    let mut e = vec![0.0; k];
                    for &f in fs {
                        for (y, ey) in e.iter_mut().enumerate() {
                            *ey += emit.w[f * k + y];
                        }
                    }
                    e
                })
                .collect();
            let t: Vec<Vec<f64>> = (0..k).map(|p| trans.w[p * k..(p + 1) * k].to_vec()).collect();
            let pred = viterbi(&emissions, &t, &start.w);
            if &pred != gold {
                for (i, fs) in feats.iter().enumerate() {
                    if pred[i] != gold[i] {
                        for &f in fs {
                            emit.update(f * k + gold[i], 1.0, c);
                            emit.update(f * k + pred[i], -1.0, c);
                        }
                    }
                }
                start.update(gold[0], 1.0, c);
                start.update(pred[0], -1.0, c);
                for i in 1..gold.len() {
                    trans.update(gold[i - 1] * k + gold[i], 1.0, c);
                    trans.update(pred[i - 1] * k + pred[i], -1.0, c);
                }
            }
            c += 1.0;
        }
    }

    let emit = emit.finish(c);
    let trans = trans.finish(c);
    let mut features = HashMap::with_capacity(feature_id.len());
    for (f, id) in feature_id {
        let w = &emit[id * k..(id + 1) * k];
        if w.iter().any(|&x| x != 0.0) {
            features.insert(f, w.to_vec());
        }
    }
    Ok(TaggerModel {
        labels: template.labels,
        features,
        transitions: (0..k).map(|p| trans[p * k..(p + 1) * k].to_vec()).collect(),
        start: start.finish(c),
    })
}

/// Fraction of characters tagged with their gold label.
pub fn char_accuracy(model: &TaggerModel, examples: &[(String, PaxobsLabeling)]) -> f64 {
    let mut right = 0usize;
    let mut total = 0usize;
    for (w, gold) in examples {
        let pred = model.tag(w);
        right += pred.labels().iter().zip(gold.labels()).filter(|(a, b)| a == b).count();
        total += gold.len();
    }
    if total == 0 {
        1.0
    } else {
        right as f64 / total as f64
    }
}

/// Every character its own segment.
pub fn all_chars_segmenter(word: &str) -> Segmentation {
    Segmentation::all_chars(word.chars().count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(pairs: &[(&str, &str)]) -> Vec<(String, PaxobsLabeling)> {
        pairs.iter().map(|(w, l)| (w.to_string(), l.parse().unwrap())).collect()
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = TaggerModel::zero(vec![Label::Base(1), Label::Suffix, Label::Base(0), Label::Shared]);
        assert_eq!(m.tag("shoptics").to_string(), "AAAAAAAA");
        assert!(m.segment("shoptics").cuts().is_empty());
    }

    #[test]
    fn tie_order() {
        let m = TaggerModel::zero(vec![
            Label::Suffix,
            Label::Base(2),
            Label::Base(1),
            Label::Orphan,
            Label::Shared,
            Label::Base(0),
            Label::Prefix,
        ]);
        let s: String = m.labels().iter().map(|l| l.to_char()).collect();
        assert_eq!(s, "PAXOBCS");
    }

    #[test]
    fn singleton_memorized() {
        let data = ex(&[("shoptics", "AAXXBBBS")]);
        let m = train_tagger(&data, TaggerConfig { epochs: 5, seed: 1 }).unwrap();
        assert_eq!(m.tag("shoptics").to_string(), "AAXXBBBS");
        assert_eq!(m.segment("shoptics").cuts(), &[2, 4, 7]);
    }

    #[test]
    fn memorizes_small_set() {
        let data = ex(&[
            ("brunch", "AABBBB"),
            ("smog", "AAXB"),
            ("motel", "AXXBB"),
            ("spork", "AAXBB"),
            ("chortle", "AABBBAA"),
            ("camcorder", "AAABBBBBB"),
            ("brexit", "AABBBB"),
            ("glamping", "AAXXBBBB"),
            ("sitcom", "AAABBB"),
            ("hangry", "ABXXXX"),
        ]);
        let m = train_tagger(&data, TaggerConfig::default()).unwrap();
        assert!(char_accuracy(&m, &data) >= 0.9);
    }

    #[test]
    fn training_is_deterministic() {
        let data = ex(&[("smog", "AAXB"), ("motel", "AXXBB"), ("brunch", "AABBBB")]);
        let cfg = TaggerConfig { epochs: 4, seed: 7 };
        assert_eq!(train_tagger(&data, cfg).unwrap(), train_tagger(&data, cfg).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let data = ex(&[("smog", "AAXB"), ("motel", "AXXBB")]);
        let m = train_tagger(&data, TaggerConfig { epochs: 3, seed: 2 }).unwrap();
        let mut buf = Vec::new();
        m.write_json(&mut buf).unwrap();
        let back = TaggerModel::read_json(buf.as_slice()).unwrap();
        assert_eq!(back.tag("smotel"), m.tag("smotel"));
        assert_eq!(back.labels(), m.labels());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            train_tagger(&[], TaggerConfig::default()),
            Err(TaggerError::EmptyTrainingSet)
        ));
        let data = ex(&[("smog", "AAXB")]);
        assert!(matches!(
            train_tagger(&data, TaggerConfig { epochs: 0, seed: 0 }),
            Err(TaggerError::ZeroEpochs)
        ));
        let bad = vec![("smo".to_string(), "AAXB".parse().unwrap())];
        assert!(matches!(
            train_tagger(&bad, TaggerConfig::default()),
            Err(TaggerError::LengthMismatch { .. })
        ));
        assert!(TaggerModel::read_json(
            r#"{"labels":"BA","features":{},"transitions":[[0,0],[0,0]],"start":[0,0]}"#.as_bytes()
        )
        .is_err());
    }

    #[test]
    fn all_chars() {
        assert_eq!(all_chars_segmenter("shoptics").cuts(), &[1, 2, 3, 4, 5, 6, 7]);
        assert!(all_chars_segmenter("a").cuts().is_empty());
    }

    #[test]
    fn unseen_and_empty_words() {
        let m = train_tagger(&ex(&[("smog", "AAXB")]), TaggerConfig { epochs: 2, seed: 0 }).unwrap();
        assert_eq!(m.tag("").len(), 0);
        assert_eq!(m.tag("zzzzzzzzzzzz").len(), 12);
        assert_eq!(m.tag("ÉTÉ").len(), 3);
    }
}
