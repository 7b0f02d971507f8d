//! Layer-wise similarity between a complex word in context and its bases.
//!
//! For a record with context `S`, the word's vector at each layer is the
//! mean of its wordpiece vectors in `S`. In `S'` the word is replaced by its
//! space-separated bases; each base's pieces are averaged, then the bases
//! are averaged. The profile is the cosine between the two, per layer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ComplexWordRecord, DatasetError, Label, PaxobsLabeling, WordClass};
use crate::rankers::cosine;
use crate::rankers::mlm::{tokenize_text, BackendError, MlmBackend};
use crate::text::{find_whole_token, split_around};

/// Relation groups need more than this many members to be reported.
pub const MIN_RELATION_GROUP: usize = 15;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("{id}: {word:?} does not occur in the context")]
    WordNotInContext { id: String, word: String },
    #[error("{id}: backend returned {found} layers, announced {expected}")]
    LayerMismatch { id: String, expected: usize, found: usize },
    #[error("{id}: backend returned the wrong number of token vectors")]
    TokenMismatch { id: String },
    #[error("{id}: backend produced no pieces for {word:?}")]
    Untokenizable { id: String, word: String },
    #[error("no profiles to aggregate")]
    Empty,
    #[error("profiles have different layer counts")]
    RaggedProfiles,
    #[error("deletion rate must be in [0, 1), got {0}")]
    BadRate(f64),
    #[error("bases must be non-empty")]
    EmptyBase,
    #[error("expected {expected:.2} deletions but at most {capacity} fit without emptying a base")]
    WouldEmptyBase { expected: f64, capacity: usize },
    #[error("smoothies need exactly two bases, {id} has {bases}")]
    NotTwoBases { id: String, bases: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tokenization {
    /// The backend's own wordpieces.
    #[default]
    Default,
    /// The word is pre-split where base material changes, each later part
    /// carrying the continuation marker.
    PaxobsInformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub word_id: String,
    pub class: WordClass,
    pub relation: Option<String>,
    /// Cosine per layer, layer 0 first.
    pub values: Vec<f64>,
}

fn mean_rows(rows: &[Vec<f32>]) -> Vec<f32> {
    let mut acc = vec![0.0f64; rows.first().map_or(0, Vec::len)];
    for r in rows {
        for (a, &x) in acc.iter_mut().zip(r) {
            *a += f64::from(x);
        }
    }
    let n = rows.len().max(1) as f64;
    acc.into_iter().map(|a| (a / n) as f32).collect()
}

fn word_pieces<B: MlmBackend + ?Sized>(
    backend: &B,
    record: &ComplexWordRecord,
    word: &str,
    mode: Tokenization,
) -> Result<Vec<String>, ProbeError> {
    let untokenizable = |w: &str| ProbeError::Untokenizable {
        id: record.id().to_string(),
        word: w.to_string(),
    };
    match mode {
        Tokenization::Default => {
            let pieces = backend
                .tokenize(&[word.to_string()])?
                .into_iter()
                .next()
                .unwrap_or_default();
            if pieces.is_empty() {
                return Err(untokenizable(word));
            }
            Ok(pieces)
        }
        Tokenization::PaxobsInformed => {
            let parts: Vec<String> = record
                .labeling()
                .base_congruent_segmentation()
                .apply(word)
                .into_iter()
                .map(str::to_string)
                .collect();
            let marker = &backend.info().cont_marker;
            let mut out = Vec::new();
            for (i, (part, pieces)) in parts.iter().zip(backend.tokenize(&parts)?).enumerate() {
                if pieces.is_empty() {
                    return Err(untokenizable(part));
                }
                for (j, p) in pieces.into_iter().enumerate() {
                    if i > 0 && j == 0 && !p.starts_with(marker.as_str()) {
                        out.push(format!("{marker}{p}"));
                    } else {
                        out.push(p);
                    }
                }
            }
            Ok(out)
        }
    }
}

pub fn similarity_profile<B: MlmBackend + ?Sized>(
    record: &ComplexWordRecord,
    backend: &B,
    mode: Tokenization,
) -> Result<SimilarityProfile, ProbeError> {
    let id = record.id().to_string();
    let (left, right) =
        split_around(record.context(), record.surface()).ok_or_else(|| ProbeError::WordNotInContext {
            id: id.clone(),
            word: record.surface().to_string(),
        })?;
    let left = tokenize_text(backend, &left.to_lowercase())?;
    let right = tokenize_text(backend, &right.to_lowercase())?;
    let word = record.surface().to_lowercase();
    let pieces = word_pieces(backend, record, &word, mode)?;

    let mut s = left.clone();
    let word_span = s.len()..s.len() + pieces.len();
    s.extend(pieces);
    s.extend_from_slice(&right);

    let bases: Vec<String> = record.bases().iter().map(|b| b.to_lowercase()).collect();
    let base_pieces = backend.tokenize(&bases)?;
    let mut s2 = left;
    let mut spans: Vec<Range<usize>> = Vec::new();
    for (b, p) in bases.iter().zip(base_pieces) {
        if p.is_empty() {
            return Err(ProbeError::Untokenizable { id, word: b.clone() });
        }
        spans.push(s2.len()..s2.len() + p.len());
        s2.extend(p);
    }
    s2.extend(right);

    let expected = backend.info().layers;
    let e1 = backend.encode_layers(&s)?;
    let e2 = backend.encode_layers(&s2)?;
    for e in [&e1, &e2] {
        if e.len() != expected {
            return Err(ProbeError::LayerMismatch {
                id,
                expected,
                found: e.len(),
            });
        }
    }
    if e1.iter().any(|l| l.len() != s.len()) || e2.iter().any(|l| l.len() != s2.len()) {
        return Err(ProbeError::TokenMismatch { id });
    }

    let values = e1
        .iter()
        .zip(&e2)
        .map(|(l1, l2)| {
            let w = mean_rows(&l1[word_span.clone()]);
            let per_base: Vec<Vec<f32>> = spans.iter().map(|sp| mean_rows(&l2[sp.clone()])).collect();
            let b = mean_rows(&per_base);
            cosine(&w, &b).unwrap_or(0.0)
        })
        .collect();
    Ok(SimilarityProfile {
        word_id: id,
        class: record.class(),
        relation: record.relation().map(str::to_string),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Class,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n: usize,
    pub mean: Vec<f64>,
    /// Standard error of the mean (sample standard deviation over sqrt n);
    /// 0 for a single profile.
    pub sem: Vec<f64>,
}

/// Per-layer mean and standard error for each group, ordered by group
/// name. Profiles without a relation are left out of relation groups.
/// With `min_n`, only groups of more than `min_n` profiles are kept.
pub fn aggregate_profiles(
    profiles: &[SimilarityProfile],
    by: GroupBy,
    min_n: Option<usize>,
) -> Result<Vec<GroupSummary>, ProbeError> {
    if profiles.is_empty() {
        return Err(ProbeError::Empty);
    }
    let layers = profiles[0].values.len();
    if profiles.iter().any(|p| p.values.len() != layers) {
        return Err(ProbeError::RaggedProfiles);
    }
    let mut groups: BTreeMap<String, Vec<&SimilarityProfile>> = BTreeMap::new();
    for p in profiles {
        let key = match by {
            GroupBy::Class => Some(p.class.as_str().to_string()),
            GroupBy::Relation => p.relation.clone(),
        };
        if let Some(k) = key {
            groups.entry(k).or_default().push(p);
        }
    }
    Ok(groups
        .into_iter()
        .filter(|(_, members)| min_n.is_none_or(|m| members.len() > m))
        .map(|(group, members)| {
            let n = members.len();
            let mut mean = vec![0.0; layers];
            let mut sem = vec![0.0; layers];
            for l in 0..layers {
                let xs: Vec<f64> = members.iter().map(|p| p.values[l]).collect();
                let m = xs.iter().sum::<f64>() / n as f64;
                mean[l] = m;
                if n > 1 {
                    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                    sem[l] = (var / n as f64).sqrt();
                }
            }
            GroupSummary { group, n, mean, sem }
        })
        .collect())
}

/// One row per profile and layer: `word_id`, `class`, `relation`, `layer`,
/// `cosine`.
pub fn profiles_tsv(profiles: &[SimilarityProfile]) -> String {
    let mut out = String::from("word_id\tclass\trelation\tlayer\tcosine\n");
    for p in profiles {
        for (l, v) in p.values.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}",
                p.word_id,
                p.class,
                p.relation.as_deref().unwrap_or(""),
                l,
                v
            );
        }
    }
    out
}

pub fn summaries_tsv(groups: &[GroupSummary]) -> String {
    let mut out = String::from("group\tn\tlayer\tmean\tsem\n");
    for g in groups {
        for (l, (m, s)) in g.mean.iter().zip(&g.sem).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{:.6}\t{:.6}", g.group, g.n, l, m, s);
        }
    }
    out
}

/// Mock blend of two bases made by deleting characters at the seam.
///
/// The number of deletions is Binomial(|a| + |b|, rate), capped so each
/// base keeps at least one character; how many come off the end of `a`
/// versus the start of `b` is uniform over the feasible splits.
pub fn synth_smoothie<R: Rng + ?Sized>(
    a: &str,
    b: &str,
    rate: f64,
    rng: &mut R,
) -> Result<(String, PaxobsLabeling), ProbeError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(ProbeError::BadRate(rate));
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() || b.is_empty() {
        return Err(ProbeError::EmptyBase);
    }
    let total = a.len() + b.len();
    let capacity = total - 2;
    let expected = rate * total as f64;
    if expected > capacity as f64 {
        return Err(ProbeError::WouldEmptyBase { expected, capacity });
    }
    let drawn = (0..total).filter(|_| rng.gen_bool(rate)).count();
    let k = drawn.min(capacity);
    let lo = k.saturating_sub(b.len() - 1);
    let hi = k.min(a.len() - 1);
    let from_a = rng.gen_range(lo..=hi);
    let keep_a = a.len() - from_a;
    let skip_b = k - from_a;
    let surface: String = a[..keep_a].iter().chain(&b[skip_b..]).collect();
    let labels = std::iter::repeat_n(Label::Base(0), keep_a)
        .chain(std::iter::repeat_n(Label::Base(1), b.len() - skip_b))
        .collect();
    Ok((surface, PaxobsLabeling::new(labels)))
}

/// The record with its word replaced by a smoothie of its two bases, in
/// the surface form and in the first matching position of the context.
pub fn smoothie_record<R: Rng + ?Sized>(
    record: &ComplexWordRecord,
    rate: f64,
    rng: &mut R,
) -> Result<ComplexWordRecord, ProbeError> {
    let bases = record.bases();
    if bases.len() != 2 {
        return Err(ProbeError::NotTwoBases {
            id: record.id().to_string(),
            bases: bases.len(),
        });
    }
    let (surface, labeling) = synth_smoothie(&bases[0].to_lowercase(), &bases[1].to_lowercase(), rate, rng)?;
    let ctx = record.context();
    let context = match find_whole_token(ctx, record.surface()) {
        Some(span) => format!("{}{}{}", &ctx[..span.start], surface, &ctx[span.end..]),
        None => ctx.to_string(),
    };
    Ok(ComplexWordRecord::new(
        surface,
        record.class(),
        bases.to_vec(),
        labeling,
        record.relation().map(str::to_string),
        context,
        Some(record.id().to_string()),
    )?)
}
