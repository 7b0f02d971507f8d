//! Masked-LM ranking of candidate bases.
//!
//! Pair mode replaces the blend with two masks and orders candidate pairs
//! by `P(mask1 = first piece of a) + P(mask2 = first piece of b)`. Pairs
//! sharing the same first-piece pair are re-ranked by filling those pieces
//! in and predicting the next piece pair, recursively. A pair whose A (or
//! B) runs out of pieces goes to the top of its group, A-exhausted pairs
//! before B-exhausted ones. Single-side mode does the same with one mask.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::{tokenize_text, BackendError, MaskQuery, MlmBackend};
use crate::recovery::{CandidateSet, Ranking, Side};

#[derive(Debug, Error)]
pub enum MlmError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("backend produced no pieces for {0:?}")]
    Untokenizable(String),
    #[error("backend returned {found} mask distributions, expected {expected}")]
    MaskCount { expected: usize, found: usize },
}

/// Text on either side of the blend, already lowercased.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MlmContext {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlmOptions {
    /// Single-side mode places the other side's true base next to the mask.
    pub plus_other_base: bool,
    /// When false the masks are sent alone, without the sentence.
    pub context: bool,
}

impl Default for MlmOptions {
    fn default() -> Self {
        MlmOptions {
            plus_other_base: false,
            context: true,
        }
    }
}

/// Score, piece pair and member pairs of one tie group.
type ScoredGroup<'p, 'w> = (f64, (&'p String, &'p String), Vec<(&'w str, &'w str)>);

struct Prepared<'a, B: ?Sized> {
    backend: &'a B,
    mask: String,
    left: Vec<String>,
    right: Vec<String>,
    pieces: HashMap<String, Vec<String>>,
}

impl<'a, B: MlmBackend + ?Sized> Prepared<'a, B> {
    fn new(backend: &'a B, cands: &CandidateSet, ctx: &MlmContext, opts: MlmOptions) -> Result<Self, MlmError> {
        let (left, right) = if opts.context {
            (tokenize_text(backend, &ctx.left)?, tokenize_text(backend, &ctx.right)?)
        } else {
            (Vec::new(), Vec::new())
        };
        let words: BTreeSet<&String> = cands
            .side_a
            .iter()
            .chain(&cands.side_b)
            .chain([&cands.true_a, &cands.true_b])
            .collect();
        let words: Vec<String> = words.into_iter().cloned().collect();
        let tokenized = if words.is_empty() {
            Vec::new()
        } else {
            backend.tokenize(&words)?
        };
        if tokenized.len() != words.len() {
            return Err(BackendError::Protocol("tokenize returned the wrong number of words".into()).into());
        }
        let mut pieces = HashMap::new();
        for (w, p) in words.into_iter().zip(tokenized) {
            pieces.insert(w, p);
        }
        Ok(Prepared {
            backend,
            mask: backend.info().mask.clone(),
            left,
            right,
            pieces,
        })
    }

    fn pieces_of(&self, word: &str) -> Result<&[String], MlmError> {
        match self.pieces.get(word) {
            Some(p) if !p.is_empty() => Ok(p),
            _ => Err(MlmError::Untokenizable(word.to_string())),
        }
    }

    fn query(
        &self,
        tokens: Vec<String>,
        wanted: BTreeSet<&String>,
        masks: usize,
    ) -> Result<Vec<super::PieceProbs>, MlmError> {
        let q = MaskQuery::Pieces(wanted.into_iter().cloned().collect());
        let d = self.backend.mask_probs(&tokens, &q)?;
        if d.len() != masks {
            return Err(MlmError::MaskCount {
                expected: masks,
                found: d.len(),
            });
        }
        Ok(d)
    }

    fn order_pairs(
        &self,
        group: Vec<(&'a str, &'a str)>,
        depth: usize,
        out: &mut Vec<(String, String)>,
    ) -> Result<(), MlmError> {
        let mut ended_a = Vec::new();
        let mut ended_b = Vec::new();
        let mut rest = Vec::new();
        for (a, b) in group {
            let (pa, pb) = (self.pieces_of(a)?, self.pieces_of(b)?);
            if pa.len() <= depth {
                ended_a.push((a, b));
            } else if pb.len() <= depth {
                ended_b.push((a, b));
            } else {
                rest.push((a, b, &pa[depth], &pb[depth]));
            }
        }
        ended_a.sort();
        ended_b.sort();
        out.extend(
            ended_a
                .into_iter()
                .chain(ended_b)
                .map(|(a, b)| (a.to_string(), b.to_string())),
        );
        if rest.is_empty() {
            return Ok(());
        }

        // Every member shares the pieces before `depth`.
        let (a0, b0, _, _) = rest[0];
        let mut tokens = self.left.clone();
        tokens.extend_from_slice(&self.pieces_of(a0)?[..depth]);
        tokens.push(self.mask.clone());
        tokens.extend_from_slice(&self.pieces_of(b0)?[..depth]);
        tokens.push(self.mask.clone());
        tokens.extend_from_slice(&self.right);
        let wanted = rest.iter().flat_map(|(_, _, x, y)| [*x, *y]).collect();
        let d = self.query(tokens, wanted, 2)?;

        let mut groups: BTreeMap<(&String, &String), Vec<(&str, &str)>> = BTreeMap::new();
        for (a, b, x, y) in rest {
            groups.entry((x, y)).or_default().push((a, b));
        }
        let mut scored: Vec<ScoredGroup<'_, 'a>> = groups
            .into_iter()
            .map(|((x, y), members)| {
                let s = d[0].get(x).copied().unwrap_or(0.0) + d[1].get(y).copied().unwrap_or(0.0);
                (s, (x, y), members)
            })
            .collect();
        scored.sort_by(|p, q| q.0.total_cmp(&p.0).then_with(|| p.1.cmp(&q.1)));
        for (_, _, members) in scored {
            if members.len() == 1 {
                out.push((members[0].0.to_string(), members[0].1.to_string()));
            } else {
                self.order_pairs(members, depth + 1, out)?;
            }
        }
        Ok(())
    }

    fn order_side(
        &self,
        side: Side,
        other: Option<&[String]>,
        group: Vec<&'a str>,
        depth: usize,
        out: &mut Vec<String>,
    ) -> Result<(), MlmError> {
        let mut ended = Vec::new();
        let mut rest = Vec::new();
        for c in group {
            let p = self.pieces_of(c)?;
            if p.len() <= depth {
                ended.push(c);
            } else {
                rest.push((c, &p[depth]));
            }
        }
        ended.sort();
        out.extend(ended.into_iter().map(str::to_string));
        if rest.is_empty() {
            return Ok(());
        }

        let other = other.unwrap_or(&[]);
        let mut tokens = self.left.clone();
        if side == Side::B {
            tokens.extend_from_slice(other);
        }
        tokens.extend_from_slice(&self.pieces_of(rest[0].0)?[..depth]);
        tokens.push(self.mask.clone());
        if side == Side::A {
            tokens.extend_from_slice(other);
        }
        tokens.extend_from_slice(&self.right);
        let wanted = rest.iter().map(|(_, x)| *x).collect();
        let d = self.query(tokens, wanted, 1)?;

        let mut groups: BTreeMap<&String, Vec<&str>> = BTreeMap::new();
        for (c, x) in rest {
            groups.entry(x).or_default().push(c);
        }
        let mut scored: Vec<(f64, &String, Vec<&str>)> = groups
            .into_iter()
            .map(|(x, members)| (d[0].get(x).copied().unwrap_or(0.0), x, members))
            .collect();
        scored.sort_by(|p, q| q.0.total_cmp(&p.0).then_with(|| p.1.cmp(q.1)));
        for (_, _, members) in scored {
            if members.len() == 1 {
                out.push(members[0].to_string());
            } else {
                self.order_side(side, Some(other), members, depth + 1, out)?;
            }
        }
        Ok(())
    }
}

pub fn rank_pairs_by_mlm<B: MlmBackend + ?Sized>(
    cands: &CandidateSet,
    backend: &B,
    ctx: &MlmContext,
    opts: MlmOptions,
) -> Result<Vec<(String, String)>, MlmError> {
    let prep = Prepared::new(backend, cands, ctx, opts)?;
    let group: Vec<(&str, &str)> = cands
        .side_a
        .iter()
        .flat_map(|a| cands.side_b.iter().map(move |b| (a.as_str(), b.as_str())))
        .collect();
    let mut out = Vec::with_capacity(group.len());
    if !group.is_empty() {
        prep.order_pairs(group, 0, &mut out)?;
    }
    Ok(out)
}

pub fn rank_side_by_mlm<B: MlmBackend + ?Sized>(
    cands: &CandidateSet,
    side: Side,
    backend: &B,
    ctx: &MlmContext,
    opts: MlmOptions,
) -> Result<Vec<String>, MlmError> {
    let prep = Prepared::new(backend, cands, ctx, opts)?;
    side_with(&prep, cands, side, opts)
}

fn side_with<B: MlmBackend + ?Sized>(
    prep: &Prepared<'_, B>,
    cands: &CandidateSet,
    side: Side,
    opts: MlmOptions,
) -> Result<Vec<String>, MlmError> {
    let other = match (opts.plus_other_base, side) {
        (false, _) => None,
        (true, Side::A) => Some(prep.pieces_of(&cands.true_b)?),
        (true, Side::B) => Some(prep.pieces_of(&cands.true_a)?),
    };
    let group: Vec<&str> = cands.side(side).iter().map(String::as_str).collect();
    let mut out = Vec::with_capacity(group.len());
    if !group.is_empty() {
        prep.order_side(side, other, group, 0, &mut out)?;
    }
    Ok(out)
}

/// Both single-side rankings, plus the pair ranking unless
/// `plus_other_base` is set (the other base is only defined per side).
pub fn rank_by_mlm<B: MlmBackend + ?Sized>(
    cands: &CandidateSet,
    backend: &B,
    ctx: &MlmContext,
    opts: MlmOptions,
) -> Result<Ranking, MlmError> {
    let prep = Prepared::new(backend, cands, ctx, opts)?;
    let pairs = if opts.plus_other_base {
        None
    } else {
        let group: Vec<(&str, &str)> = cands
            .side_a
            .iter()
            .flat_map(|a| cands.side_b.iter().map(move |b| (a.as_str(), b.as_str())))
            .collect();
        let mut out = Vec::with_capacity(group.len());
        if !group.is_empty() {
            prep.order_pairs(group, 0, &mut out)?;
        }
        Some(out)
    };
    Ok(Ranking {
        blend_id: cands.blend_id.clone(),
        pairs,
        side_a: Some(side_with(&prep, cands, Side::A, opts)?),
        side_b: Some(side_with(&prep, cands, Side::B, opts)?),
    })
}

#[cfg(test)]
mod tests {
    use super::super::MockBackend;
    use super::*;

    fn cands(a: &[&str], b: &[&str], ta: &str, tb: &str) -> CandidateSet {
        let v = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        CandidateSet {
            blend_id: "t".into(),
            surface: "thrupple".into(),
            side_a: v(a),
            side_b: v(b),
            true_a: ta.into(),
            true_b: tb.into(),
            a_present: true,
            b_present: true,
        }
    }

    fn p(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn delta_distributions() {
        let m =
            MockBackend::from_json(r#"{"layers": 1, "dim": 1, "default": [{"three": 1.0}, {"couple": 1.0}]}"#).unwrap();
        let c = cands(&["thrash", "three"], &["couple", "example"], "three", "couple");
        let r = rank_pairs_by_mlm(&c, &m, &MlmContext::default(), MlmOptions::default()).unwrap();
        assert_eq!(r[0], p("three", "couple"));
        // (three, example) and (thrash, couple) both score 1; piece order breaks the tie
        assert_eq!(
            r[1..],
            [p("thrash", "couple"), p("three", "example"), p("thrash", "example")]
        );
    }

    #[test]
    fn second_piece_breaks_tie() {
        let m = MockBackend::from_json(
            r###"{"layers": 1, "dim": 1,
                "tokenize": {"threep": ["thr", "##eep"], "three": ["thr", "##ee"]},
                "rules": [{"when": ["thr", "[MASK]", "cou", "[MASK]"], "probs": [{"##ee": 0.9, "##eep": 0.1}, {}]}],
                "default": [{"thr": 0.5}, {"cou": 0.5}]}"###,
        )
        .unwrap();
        let c = cands(&["threep", "three"], &["cou"], "three", "cou");
        // "cou" has one piece, so both pairs exhaust B at depth 1 and float
        // lexicographically; give B two pieces instead
        let r = rank_pairs_by_mlm(&c, &m, &MlmContext::default(), MlmOptions::default()).unwrap();
        assert_eq!(r, vec![p("three", "cou"), p("threep", "cou")]);

        let m = MockBackend::from_json(
            r###"{"layers": 1, "dim": 1,
                "tokenize": {"threep": ["thr", "##eep"], "three": ["thr", "##ee"], "couple": ["cou", "##ple"]},
                "rules": [{"when": ["thr", "[MASK]", "cou", "[MASK]"], "probs": [{"##ee": 0.1, "##eep": 0.9}, {}]}],
                "default": [{"thr": 0.5}, {"cou": 0.5}]}"###,
        )
        .unwrap();
        let c = cands(&["three", "threep"], &["couple"], "three", "couple");
        let r = rank_pairs_by_mlm(&c, &m, &MlmContext::default(), MlmOptions::default()).unwrap();
        assert_eq!(r, vec![p("threep", "couple"), p("three", "couple")]);
    }

    #[test]
    fn exhausted_float_a_before_b() {
        let m = MockBackend::from_json(
            r###"{"layers": 1, "dim": 1,
                "tokenize": {"th": ["th"], "thr": ["th", "##r"], "thx": ["th", "##x"],
                             "co": ["co"], "cop": ["co", "##p"]},
                "rules": [{"when": ["th", "[MASK]", "co", "[MASK]"], "probs": [{"##r": 0.9, "##x": 0.2}, {"##p": 0.9}]}],
                "default": [{"th": 0.5}, {"co": 0.5}]}"###,
        )
        .unwrap();
        let c = cands(&["th", "thr", "thx"], &["co", "cop"], "thr", "cop");
        let r = rank_pairs_by_mlm(&c, &m, &MlmContext::default(), MlmOptions::default()).unwrap();
        assert_eq!(
            r,
            vec![
                // A ran out first
                p("th", "co"),
                p("th", "cop"),
                // then B
                p("thr", "co"),
                p("thx", "co"),
                // then by next-piece scores: ##r+##p 1.8, ##x+##p 1.1
                p("thr", "cop"),
                p("thx", "cop"),
            ]
        );
    }

    #[test]
    fn single_side_variants_and_context() {
        let m = MockBackend::from_json(
            r###"{"layers": 1, "dim": 1,
                "rules": [
                    {"when": ["[MASK]", "couple", "is"], "probs": [{"thrash": 0.9, "three": 0.1}]},
                    {"when": ["the", "[MASK]", "is"], "probs": [{"three": 0.9, "thrash": 0.1}]}
                ],
                "default": [{"thrash": 0.3, "three": 0.2}]}"###,
        )
        .unwrap();
        let c = cands(&["thrash", "three"], &["couple"], "three", "couple");
        let ctx = MlmContext {
            left: "the".into(),
            right: "is".into(),
        };
        let plain = rank_side_by_mlm(&c, Side::A, &m, &ctx, MlmOptions::default()).unwrap();
        assert_eq!(plain, vec!["three", "thrash"]);
        let plus = MlmOptions {
            plus_other_base: true,
            context: true,
        };
        assert_eq!(
            rank_side_by_mlm(&c, Side::A, &m, &ctx, plus).unwrap(),
            vec!["thrash", "three"]
        );
        let bare = MlmOptions {
            plus_other_base: false,
            context: false,
        };
        assert_eq!(
            rank_side_by_mlm(&c, Side::A, &m, &ctx, bare).unwrap(),
            vec!["thrash", "three"]
        );
        let r = rank_by_mlm(&c, &m, &ctx, plus).unwrap();
        assert!(r.pairs.is_none());
        assert_eq!(r.side_b.unwrap(), vec!["couple"]);
    }

    #[test]
    fn empty_and_untokenizable() {
        let m = MockBackend::from_json(r#"{"layers": 1, "dim": 1, "tokenize": {"bad": []}}"#).unwrap();
        let c = cands(&[], &[], "a", "b");
        let r = rank_by_mlm(&c, &m, &MlmContext::default(), MlmOptions::default()).unwrap();
        assert_eq!(r.pairs.unwrap(), vec![]);
        let c = cands(&["bad"], &["b"], "bad", "b");
        assert!(matches!(
            rank_pairs_by_mlm(&c, &m, &MlmContext::default(), MlmOptions::default()),
            Err(MlmError::Untokenizable(_))
        ));
    }
}
