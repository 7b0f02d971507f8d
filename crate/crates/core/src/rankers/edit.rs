use crate::recovery::{CandidateSet, Ranking, Side};

use super::sort_with_ties;

/// Levenshtein distance over Unicode scalar values with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Pairs by ascending distance between the two candidates.
pub fn rank_pairs_by_edit_distance(cands: &CandidateSet) -> Vec<(String, String)> {
    sort_with_ties(cands.pairs(), |(a, b)| edit_distance(a, b), Ord::cmp)
}

/// One side's candidates by distance to the other side's true base.
pub fn rank_side_by_edit_distance(cands: &CandidateSet, side: Side) -> Vec<String> {
    let other = match side {
        Side::A => &cands.true_b,
        Side::B => &cands.true_a,
    };
    sort_with_ties(cands.side(side).to_vec(), |c| edit_distance(c, other), Ord::cmp)
}

pub fn rank_by_edit_distance(cands: &CandidateSet) -> Ranking {
    Ranking {
        blend_id: cands.blend_id.clone(),
        pairs: Some(rank_pairs_by_edit_distance(cands)),
        side_a: Some(rank_side_by_edit_distance(cands, Side::A)),
        side_b: Some(rank_side_by_edit_distance(cands, Side::B)),
    }
}
