//! Rankers for base recovery.
//!
//! Every ranker produces a [`Ranking`](crate::recovery::Ranking): an order
//! over candidate pairs and/or over one side's candidates with the other
//! true base held fixed. Whatever the ranker's own criterion, remaining
//! ties are broken lexicographically so rankings are total and repeatable.

mod charlm;
mod edit;
mod embedding;
pub mod mlm;

pub use charlm::{rank_by_char_lm, CharLmError, CharNgramLm, Direction, DEFAULT_ORDER, DEFAULT_SMOOTHING};
pub use edit::{edit_distance, rank_by_edit_distance, rank_pairs_by_edit_distance, rank_side_by_edit_distance};
pub use embedding::{cosine, rank_by_embedding, EmbeddingError, EmbeddingTable};

use std::cmp::Ordering;

/// Sorts `items` by `key` under `cmp`, then by the items themselves.
pub(crate) fn sort_with_ties<T: Ord, K>(
    items: Vec<T>,
    key: impl Fn(&T) -> K,
    cmp: impl Fn(&K, &K) -> Ordering,
) -> Vec<T> {
    let mut keyed: Vec<(K, T)> = items.into_iter().map(|t| (key(&t), t)).collect();
    keyed.sort_by(|(ka, a), (kb, b)| cmp(ka, kb).then_with(|| a.cmp(b)));
    keyed.into_iter().map(|(_, t)| t).collect()
}

/// Descending score with `None` after every `Some`.
pub(crate) fn desc_missing_last(a: &Option<f64>, b: &Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}
