use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CandidateSet, RecoveryError};

/// A ranker's output for one blend. Pair rankers fill `pairs`; single-side
/// rankers fill `side_a` and/or `side_b`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub blend_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_a: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_b: Option<Vec<String>>,
}

/// 1-based ranks of the truth. A true base missing from the candidates is
/// ranked one past the end, so an empty list ranks it first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub blend_id: String,
    pub rank_a: Option<usize>,
    pub rank_b: Option<usize>,
    pub rank_pair: Option<usize>,
    pub top1_correct: Option<bool>,
}

fn is_permutation<T: Eq + std::hash::Hash>(ranked: &[T], expected: impl IntoIterator<Item = T>) -> bool {
    let expected: HashSet<T> = expected.into_iter().collect();
    if ranked.len() != expected.len() {
        return false;
    }
    let mut seen = HashSet::with_capacity(ranked.len());
    ranked.iter().all(|x| expected.contains(x) && seen.insert(x))
}

fn rank_of<T: PartialEq>(ranked: &[T], truth: &T) -> usize {
    ranked
        .iter()
        .position(|x| x == truth)
        .map_or(ranked.len() + 1, |i| i + 1)
}

pub fn score_ranking(cands: &CandidateSet, ranking: &Ranking) -> Result<RecoveryScore, RecoveryError> {
    if ranking.blend_id != cands.blend_id {
        return Err(RecoveryError::IdMismatch {
            expected: cands.blend_id.clone(),
            found: ranking.blend_id.clone(),
        });
    }
    let bad = |what| RecoveryError::NotPermutation {
        id: cands.blend_id.clone(),
        what,
    };
    let rank_pair = match &ranking.pairs {
        Some(pairs) => {
            let all = cands
                .side_a
                .iter()
                .flat_map(|a| cands.side_b.iter().map(move |b| (a.clone(), b.clone())));
            if !is_permutation(pairs, all) {
                return Err(bad("pair"));
            }
            Some(rank_of(pairs, &(cands.true_a.clone(), cands.true_b.clone())))
        }
        None => None,
    };
    let side = |ranked: &Option<Vec<String>>, list: &[String], truth: &String, what| match ranked {
        Some(r) if !is_permutation(r, list.iter().cloned()) => Err(bad(what)),
        Some(r) => Ok(Some(rank_of(r, truth))),
        None => Ok(None),
    };
    Ok(RecoveryScore {
        blend_id: cands.blend_id.clone(),
        rank_a: side(&ranking.side_a, &cands.side_a, &cands.true_a, "side A")?,
        rank_b: side(&ranking.side_b, &cands.side_b, &cands.true_b, "side B")?,
        rank_pair,
        top1_correct: rank_pair.map(|r| r == 1),
    })
}

/// Ranks the truth last, everything else in lexicographic order.
pub fn lower_bound_ranking(cands: &CandidateSet) -> Ranking {
    fn truth_last<T: PartialEq>(mut items: Vec<T>, truth: &T) -> Vec<T> {
        if let Some(i) = items.iter().position(|x| x == truth) {
            let t = items.remove(i);
            items.push(t);
        }
        items
    }
    Ranking {
        blend_id: cands.blend_id.clone(),
        pairs: Some(truth_last(cands.pairs(), &(cands.true_a.clone(), cands.true_b.clone()))),
        side_a: Some(truth_last(cands.side_a.clone(), &cands.true_a)),
        side_b: Some(truth_last(cands.side_b.clone(), &cands.true_b)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub n: usize,
    pub mrr_a: Option<f64>,
    pub mrr_b: Option<f64>,
    pub mrr_pair: Option<f64>,
    pub p_at_1: Option<f64>,
}

fn mean_rr(ranks: &[Option<usize>], what: &'static str) -> Result<Option<f64>, RecoveryError> {
    let present: Vec<usize> = ranks.iter().flatten().copied().collect();
    if present.is_empty() {
        return Ok(None);
    }
    if present.len() != ranks.len() {
        return Err(RecoveryError::Mixed { what });
    }
    Ok(Some(
        present.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / present.len() as f64,
    ))
}

pub fn aggregate_recovery(scores: &[RecoveryScore]) -> Result<RecoveryMetrics, RecoveryError> {
    if scores.is_empty() {
        return Err(RecoveryError::Empty);
    }
    let col = |f: fn(&RecoveryScore) -> Option<usize>| scores.iter().map(f).collect::<Vec<_>>();
    let mrr_pair = mean_rr(&col(|s| s.rank_pair), "pairs")?;
    let p_at_1 =
        mrr_pair.map(|_| scores.iter().filter(|s| s.top1_correct == Some(true)).count() as f64 / scores.len() as f64);
    Ok(RecoveryMetrics {
        n: scores.len(),
        mrr_a: mean_rr(&col(|s| s.rank_a), "side A")?,
        mrr_b: mean_rr(&col(|s| s.rank_b), "side B")?,
        mrr_pair,
        p_at_1,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryTableRow {
    pub model: String,
    #[serde(flatten)]
    pub metrics: RecoveryMetrics,
}

/// Tab-separated table with columns `MRR-A`, `MRR-B`, `MRR-ω`, `P@1`;
/// metrics a ranker does not produce are shown as `-`.
pub fn format_recovery_tsv(rows: &[RecoveryTableRow]) -> String {
    let cell = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    let mut out = String::from("Model\tN\tMRR-A\tMRR-B\tMRR-ω\tP@1\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.model,
            m.n,
            cell(m.mrr_a),
            cell(m.mrr_b),
            cell(m.mrr_pair),
            cell(m.p_at_1)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(a: &[&str], b: &[&str], ta: &str, tb: &str) -> CandidateSet {
        let v = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        CandidateSet {
            blend_id: "x".into(),
            surface: "x".into(),
            side_a: v(a),
            side_b: v(b),
            true_a: ta.into(),
            true_b: tb.into(),
            a_present: a.contains(&ta),
            b_present: b.contains(&tb),
        }
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn true_pair_first() {
        let c = cands(&["a1", "a2"], &["b1", "b2", "b3"], "a1", "b1");
        let mut pairs = c.pairs();
        pairs.reverse();
        let i = pairs.iter().position(|p| *p == pair("a1", "b1")).unwrap();
        pairs.swap(0, i);
        let r = Ranking {
            blend_id: "x".into(),
            pairs: Some(pairs),
            ..Default::default()
        };
        let s = score_ranking(&c, &r).unwrap();
        assert_eq!(s.rank_pair, Some(1));
        assert_eq!(s.top1_correct, Some(true));
    }

    #[test]
    fn missing_base_ranked_last() {
        let c = cands(&["a1", "a2", "a3", "a4"], &["b1"], "three", "b1");
        let r = Ranking {
            blend_id: "x".into(),
            side_a: Some(c.side_a.clone()),
            ..Default::default()
        };
        let s = score_ranking(&c, &r).unwrap();
        assert_eq!(s.rank_a, Some(5));
        let m = aggregate_recovery(&[s]).unwrap();
        assert!((m.mrr_a.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(m.mrr_pair, None);
    }

    #[test]
    fn empty_lists_rank_first() {
        let c = cands(&[], &[], "three", "couple");
        let s = score_ranking(&c, &lower_bound_ranking(&c)).unwrap();
        assert_eq!((s.rank_a, s.rank_b, s.rank_pair), (Some(1), Some(1), Some(1)));
        assert_eq!(s.top1_correct, Some(true));
    }

    #[test]
    fn rejects_non_permutations() {
        let c = cands(&["a1", "a2"], &["b1"], "a1", "b1");
        let dup = Ranking {
            blend_id: "x".into(),
            pairs: Some(vec![pair("a1", "b1"), pair("a1", "b1")]),
            ..Default::default()
        };
        assert!(matches!(
            score_ranking(&c, &dup),
            Err(RecoveryError::NotPermutation { .. })
        ));
        let short = Ranking {
            blend_id: "x".into(),
            side_b: Some(vec![]),
            ..Default::default()
        };
        assert!(score_ranking(&c, &short).is_err());
        let other = Ranking {
            blend_id: "y".into(),
            ..Default::default()
        };
        assert!(matches!(
            score_ranking(&c, &other),
            Err(RecoveryError::IdMismatch { .. })
        ));
    }

    #[test]
    fn lower_bound_puts_truth_last() {
        let c = cands(&["a1", "a2"], &["b1", "b2"], "a1", "b1");
        let s = score_ranking(&c, &lower_bound_ranking(&c)).unwrap();
        assert_eq!((s.rank_a, s.rank_b, s.rank_pair), (Some(2), Some(2), Some(4)));
    }

    #[test]
    fn aggregate_arithmetic() {
        let s = |r| RecoveryScore {
            blend_id: String::new(),
            rank_a: Some(r),
            rank_b: None,
            rank_pair: Some(r),
            top1_correct: Some(r == 1),
        };
        let m = aggregate_recovery(&[s(1), s(2)]).unwrap();
        assert!((m.mrr_pair.unwrap() - 0.75).abs() < 1e-12);
        assert!((m.p_at_1.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(m.mrr_b, None);
        assert!(aggregate_recovery(&[]).is_err());
        let mut odd = s(3);
        odd.rank_a = None;
        assert!(matches!(
            aggregate_recovery(&[s(1), odd]),
            Err(RecoveryError::Mixed { .. })
        ));
    }

    #[test]
    fn table_layout() {
        let m = RecoveryMetrics {
            n: 2,
            mrr_a: Some(0.5),
            mrr_b: None,
            mrr_pair: Some(0.25),
            p_at_1: Some(0.0),
        };
        let t = format_recovery_tsv(&[RecoveryTableRow {
            model: "ed".into(),
            metrics: m,
        }]);
        assert_eq!(t.lines().nth(1).unwrap(), "ed\t2\t0.500\t-\t0.250\t0.000");
    }
}
