use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::{BackendError, BackendInfo, MaskQuery, MlmBackend, PieceProbs};

/// Deterministic backend driven by a JSON fixture.
///
/// ```json
/// {
///   "layers": 2, "dim": 2, "mask": "[MASK]", "cont_marker": "##",
///   "tokenize": {"segmenting": ["segment", "##ing"]},
///   "rules": [{"when": ["three", "[MASK]"], "probs": [{"##ee": 0.9}]}],
///   "default": [{"three": 0.8}, {"couple": 0.7}],
///   "vectors": {"shop": [[1, 0], [0, 1]]}
/// }
/// ```
///
/// Words missing from `tokenize` are a single piece. A mask request uses
/// the first rule whose `when` tokens occur contiguously in the input, else
/// `default`; `probs[i]` is the distribution at the i-th mask and unlisted
/// pieces have probability 0. Tokens missing from `vectors` encode as zero
/// vectors.
#[derive(Debug, Clone)]
pub struct MockBackend {
    info: BackendInfo,
    tokenize: HashMap<String, Vec<String>>,
    rules: Vec<Rule>,
    default: Vec<PieceProbs>,
    vectors: HashMap<String, Vec<Vec<f32>>>,
}

#[derive(Debug, Clone, Deserialize)]
struct Rule {
    when: Vec<String>,
    probs: Vec<PieceProbs>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Fixture {
    layers: usize,
    dim: usize,
    #[serde(default = "default_mask")]
    mask: String,
    #[serde(default = "default_marker")]
    cont_marker: String,
    #[serde(default)]
    tokenize: HashMap<String, Vec<String>>,
    #[serde(default)]
    rules: Vec<Rule>,
    #[serde(default)]
    default: Vec<PieceProbs>,
    #[serde(default)]
    vectors: HashMap<String, Vec<Vec<f32>>>,
}

fn default_mask() -> String {
    "[MASK]".into()
}

fn default_marker() -> String {
    "##".into()
}

impl MockBackend {
    pub fn from_json(json: &str) -> Result<Self, BackendError> {
        let f: Fixture = serde_json::from_str(json).map_err(|e| BackendError::Fixture(e.to_string()))?;
        let bad = |m: String| Err(BackendError::Fixture(m));
        for (piece, layers) in &f.vectors {
            if layers.len() != f.layers || layers.iter().any(|v| v.len() != f.dim) {
                return bad(format!(
                    "vectors for {piece:?} must be {} layers of {} components",
                    f.layers, f.dim
                ));
            }
        }
        let all_probs = f.rules.iter().flat_map(|r| &r.probs).chain(&f.default);
        for dist in all_probs {
            if dist.values().any(|p| !(0.0..=1.0).contains(p)) {
                return bad("probabilities must lie in [0, 1]".into());
            }
        }
        Ok(MockBackend {
            info: BackendInfo {
                layers: f.layers,
                dim: f.dim,
                mask: f.mask,
                cont_marker: f.cont_marker,
            },
            tokenize: f.tokenize,
            rules: f.rules,
            default: f.default,
            vectors: f.vectors,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        MockBackend::from_json(&std::fs::read_to_string(path)?)
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    needle.is_empty() || haystack.windows(needle.len()).any(|w| w == needle)
}

impl MlmBackend for MockBackend {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn tokenize(&self, words: &[String]) -> Result<Vec<Vec<String>>, BackendError> {
        Ok(words
            .iter()
            .map(|w| self.tokenize.get(w).cloned().unwrap_or_else(|| vec![w.clone()]))
            .collect())
    }

    fn mask_probs(&self, tokens: &[String], query: &MaskQuery) -> Result<Vec<PieceProbs>, BackendError> {
        let masks = tokens.iter().filter(|t| **t == self.info.mask).count();
        if masks == 0 {
            return Err(BackendError::Remote("no mask token in request".into()));
        }
        let dists = self
            .rules
            .iter()
            .find(|r| contains_run(tokens, &r.when))
            .map_or(&self.default, |r| &r.probs);
        Ok((0..masks)
            .map(|i| {
                let dist = dists.get(i);
                match query {
                    MaskQuery::Pieces(pieces) => pieces
                        .iter()
                        .map(|p| (p.clone(), dist.and_then(|d| d.get(p)).copied().unwrap_or(0.0)))
                        .collect(),
                    MaskQuery::TopK(k) => {
                        let mut all: Vec<(&String, &f64)> = dist.map(|d| d.iter().collect()).unwrap_or_default();
                        all.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
                        all.into_iter().take(*k).map(|(p, &x)| (p.clone(), x)).collect()
                    }
                }
            })
            .collect())
    }

    fn encode_layers(&self, tokens: &[String]) -> Result<Vec<Vec<Vec<f32>>>, BackendError> {
        let zero = vec![0.0; self.info.dim];
        Ok((0..self.info.layers)
            .map(|l| {
                tokens
                    .iter()
                    .map(|t| self.vectors.get(t).map_or_else(|| zero.clone(), |v| v[l].clone()))
                    .collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r###"{
        "layers": 2, "dim": 2,
        "tokenize": {"segmenting": ["segment", "##ing"]},
        "rules": [{"when": ["three", "[MASK]"], "probs": [{"##ee": 0.9}]}],
        "default": [{"three": 0.8, "thr": 0.1}, {"couple": 0.7}],
        "vectors": {"shop": [[1, 0], [0, 1]]}
    }"###;

    fn s(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn tokenizes() {
        let m = MockBackend::from_json(FIXTURE).unwrap();
        assert_eq!(
            m.tokenize(&s(&["segmenting", "shop"])).unwrap(),
            vec![s(&["segment", "##ing"]), s(&["shop"])]
        );
        assert_eq!(m.info().cont_marker, "##");
    }

    #[test]
    fn mask_rules() {
        let m = MockBackend::from_json(FIXTURE).unwrap();
        let d = m
            .mask_probs(
                &s(&["[MASK]", "[MASK]"]),
                &MaskQuery::Pieces(s(&["three", "couple", "x"])),
            )
            .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0]["three"], 0.8);
        assert_eq!(d[1]["couple"], 0.7);
        assert_eq!(d[1]["x"], 0.0);
        let d = m
            .mask_probs(&s(&["a", "three", "[MASK]"]), &MaskQuery::TopK(5))
            .unwrap();
        assert_eq!(d[0].len(), 1);
        assert_eq!(d[0]["##ee"], 0.9);
        let top = m.mask_probs(&s(&["[MASK]"]), &MaskQuery::TopK(1)).unwrap();
        assert_eq!(top[0].keys().collect::<Vec<_>>(), vec!["three"]);
        assert!(m.mask_probs(&s(&["a"]), &MaskQuery::TopK(1)).is_err());
    }

    #[test]
    fn vectors() {
        let m = MockBackend::from_json(FIXTURE).unwrap();
        let v = m.encode_layers(&s(&["shop", "other"])).unwrap();
        assert_eq!(
            v,
            vec![
                vec![vec![1.0, 0.0], vec![0.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.0, 0.0]]
            ]
        );
    }

    #[test]
    fn fixture_checks() {
        assert!(MockBackend::from_json(r###"{"layers": 2, "dim": 2, "vectors": {"a": [[1, 0]]}}"###).is_err());
        assert!(MockBackend::from_json(r###"{"layers": 1, "dim": 1, "default": [{"a": 1.5}]}"###).is_err());
        assert!(MockBackend::from_json(r###"{"layers": 1, "dim": 1, "bogus": 1}"###).is_err());
    }
}
