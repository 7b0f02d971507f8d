use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

use super::{desc_missing_last, sort_with_ties};
use crate::recovery::{CandidateSet, Ranking, Side};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("embedding file has no vectors")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Static word vectors, looked up by exact string.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    /// Text format: `word v1 ... vd` per line. A leading `count dim` line
    /// is skipped. The first vector fixes the dimension.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut table = EmbeddingTable::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || (i == 0 && crate::recovery::is_vector_header(&line)) {
                continue;
            }
            let bad = |msg: String| EmbeddingError::Parse { line: i + 1, msg };
            let mut toks = line.split_whitespace();
            let word = toks.next().expect("non-blank line");
            let v = toks
                .map(|t| t.parse::<f32>().map_err(|_| bad(format!("bad number {t:?}"))))
                .collect::<Result<Vec<f32>, _>>()?;
            if table.vectors.is_empty() {
                if v.is_empty() {
                    return Err(bad("no vector components".into()));
                }
                table.dim = v.len();
            } else if v.len() != table.dim {
                return Err(bad(format!("expected {} components, found {}", table.dim, v.len())));
            }
            table.vectors.insert(word.to_string(), v);
        }
        if table.vectors.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(table)
    }

    pub fn from_vectors(vectors: HashMap<String, Vec<f32>>) -> Result<Self, EmbeddingError> {
        let dim = vectors.values().next().map(Vec::len).ok_or(EmbeddingError::Empty)?;
        if vectors.values().any(|v| v.len() != dim) {
            return Err(EmbeddingError::Parse {
                line: 0,
                msg: "vectors differ in length".into(),
            });
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// `None` when either word is missing or has a zero vector.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        cosine(self.get(a)?, self.get(b)?)
    }
}

/// Cosine similarity, or `None` if either vector has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Descending cosine; pairs or candidates without usable vectors go last.
pub fn rank_by_embedding(cands: &CandidateSet, table: &EmbeddingTable) -> Ranking {
    let pairs = sort_with_ties(cands.pairs(), |(a, b)| table.cosine(a, b), desc_missing_last);
    let side =
        |s: Side, other: &str| sort_with_ties(cands.side(s).to_vec(), |c| table.cosine(c, other), desc_missing_last);
    Ranking {
        blend_id: cands.blend_id.clone(),
        pairs: Some(pairs),
        side_a: Some(side(Side::A, &cands.true_b)),
        side_b: Some(side(Side::B, &cands.true_a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = "4 2\nshop 1 0\noptics 0.6 0.8\nshore 0 1\nzero 0 0\n";

    #[test]
    fn reads_and_scores() {
        let t = EmbeddingTable::read(FILE.as_bytes()).unwrap();
        assert_eq!((t.dim(), t.len()), (2, 4));
        assert!((t.cosine("shop", "shop").unwrap() - 1.0).abs() < 1e-12);
        assert!(t.cosine("shop", "shore").unwrap().abs() < 1e-12);
        assert!((t.cosine("shop", "optics").unwrap() - 0.6).abs() < 1e-6);
        assert_eq!(t.cosine("shop", "zero"), None);
        assert_eq!(t.cosine("shop", "nothing"), None);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(matches!(
            EmbeddingTable::read("a 1 2\nb 1\n".as_bytes()),
            Err(EmbeddingError::Parse { line: 2, .. })
        ));
        assert!(EmbeddingTable::read("a 1 x\n".as_bytes()).is_err());
        assert!(matches!(
            EmbeddingTable::read("".as_bytes()),
            Err(EmbeddingError::Empty)
        ));
    }

    #[test]
    fn ranking_order() {
        let t = EmbeddingTable::read(FILE.as_bytes()).unwrap();
        let c = CandidateSet {
            blend_id: "b".into(),
            surface: "b".into(),
            side_a: vec!["missing".into(), "shop".into(), "shore".into(), "zero".into()],
            side_b: vec!["optics".into()],
            true_a: "shop".into(),
            true_b: "optics".into(),
            a_present: true,
            b_present: true,
        };
        let r = rank_by_embedding(&c, &t);
        // cosines to optics: shop .6, shore .8; missing and zero go last
        assert_eq!(r.side_a.unwrap(), vec!["shore", "shop", "missing", "zero"]);
        assert_eq!(r.pairs.unwrap()[0], ("shore".to_string(), "optics".to_string()));
    }
}
