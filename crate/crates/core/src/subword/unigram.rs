use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use super::{SubwordError, SubwordModel, WordCounts};

/// Training knobs for [`train_unigram`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnigramConfig {
    /// Longest seed piece, in characters.
    pub max_piece_len: usize,
    /// Multi-character substrings occurring fewer times are not seeded.
    pub min_seed_freq: u64,
    /// Fraction of the vocabulary kept by each pruning round.
    pub shrink_factor: f64,
    /// EM iterations between pruning rounds.
    pub em_iterations: usize,
    /// Multi-character pieces whose expected count falls below this are
    /// dropped in the M-step.
    pub min_expected_count: f64,
    /// Cap on the number of seed pieces (chars are always kept).
    pub max_seeds: usize,
}

impl Default for UnigramConfig {
    fn default() -> Self {
        UnigramConfig {
            max_piece_len: 8,
            min_seed_freq: 2,
            shrink_factor: 0.75,
            em_iterations: 2,
            min_expected_count: 0.5,
            max_seeds: 1_000_000,
        }
    }
}

/// Piece log-probabilities; every training character is a piece.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramLmModel {
    pieces: HashMap<String, f64>,
    max_len: usize,
    unk_score: f64,
}

const UNK_PENALTY: f64 = 10.0;

impl UnigramLmModel {
    pub fn new(pieces: HashMap<String, f64>) -> Self {
        let max_len = pieces.keys().map(|p| p.chars().count()).max().unwrap_or(1);
        let min = pieces.values().copied().fold(0.0f64, f64::min);
        UnigramLmModel {
            pieces,
            max_len,
            unk_score: min - UNK_PENALTY,
        }
    }

    pub fn pieces(&self) -> &HashMap<String, f64> {
        &self.pieces
    }

    pub fn log_prob(&self, piece: &str) -> Option<f64> {
        self.pieces.get(piece).copied()
    }

    /// Score used for a single character missing from the model.
    pub fn unknown_score(&self) -> f64 {
        self.unk_score
    }

    /// Best segmentation and its total log probability. Among equal scores
    /// the first one found (shorter final piece) wins.
    pub fn viterbi(&self, word: &str) -> (Vec<String>, f64) {
        let chars: Vec<char> = word.chars().collect();
        let n = chars.len();
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back = vec![0usize; n + 1];
        best[0] = 0.0;
        let mut buf = String::new();
        for end in 1..=n {
            for start in end.saturating_sub(self.max_len)..end {
                if best[start] == f64::NEG_INFINITY {
                    continue;
                }
                buf.clear();
                buf.extend(&chars[start..end]);
                let lp = match self.pieces.get(buf.as_str()) {
                    Some(&lp) => lp,
                    None if end - start == 1 => self.unk_score,
                    None => continue,
                };
                let score = best[start] + lp;
                if score > best[end] {
                    best[end] = score;
                    back[end] = start;
                }
            }
        }
        let mut pieces = Vec::new();
        let mut end = n;
        while end > 0 {
            let start = back[end];
            pieces.push(chars[start..end].iter().collect());
            end = start;
        }
        pieces.reverse();
        (pieces, best[n])
    }

    /// One `piece<TAB>logprob` per line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, SubwordError> {
        let mut pieces = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| SubwordError::BadModelFile {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (piece, lp) = line
                .rsplit_once('\t')
                .ok_or_else(|| bad("expected piece<TAB>logprob"))?;
            let lp: f64 = lp.trim().parse().map_err(|_| bad("bad log probability"))?;
            if piece.is_empty() || lp > 0.0 || !lp.is_finite() {
                return Err(bad("empty piece or log probability outside (-inf, 0]"));
            }
            pieces.insert(piece.to_string(), lp);
        }
        Ok(UnigramLmModel::new(pieces))
    }

    /// Pieces in descending probability, ties by piece.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), SubwordError> {
        let mut entries: Vec<(&String, &f64)> = self.pieces.iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for (p, lp) in entries {
            writeln!(w, "{p}\t{lp}")?;
        }
        Ok(())
    }
}

impl SubwordModel for UnigramLmModel {
    fn encode(&self, word: &str) -> Result<Vec<String>, SubwordError> {
        if word.is_empty() {
            return Err(SubwordError::EmptyWord);
        }
        Ok(self.viterbi(word).0)
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

struct Lattice<'a> {
    words: Vec<(Vec<char>, u64)>,
    config: &'a UnigramConfig,
}

impl Lattice<'_> {
    /// Expected piece counts under the current model, and corpus log likelihood.
    fn expected_counts(&self, pieces: &HashMap<String, f64>) -> (HashMap<String, f64>, f64) {
        let mut expected: HashMap<String, f64> = HashMap::new();
        let mut loglik = 0.0;
        let max_len = self.config.max_piece_len;
        let mut buf = String::new();
        for (chars, freq) in &self.words {
            let n = chars.len();
            let mut edges: Vec<(usize, usize, f64)> = Vec::new();
            for start in 0..n {
                for end in start + 1..=n.min(start + max_len) {
                    buf.clear();
                    buf.extend(&chars[start..end]);
                    if let Some(&lp) = pieces.get(buf.as_str()) {
                        edges.push((start, end, lp));
                    }
                }
            }
            let mut alpha = vec![f64::NEG_INFINITY; n + 1];
            alpha[0] = 0.0;
            // edges are sorted by start, so process ends in order
            let mut by_end = edges.clone();
            by_end.sort_by_key(|e| e.1);
            for &(s, e, lp) in &by_end {
                alpha[e] = log_sum_exp(alpha[e], alpha[s] + lp);
            }
            let mut beta = vec![f64::NEG_INFINITY; n + 1];
            beta[n] = 0.0;
            for &(s, e, lp) in edges.iter().rev() {
                beta[s] = log_sum_exp(beta[s], beta[e] + lp);
            }
            let z = alpha[n];
            if z == f64::NEG_INFINITY {
                continue;
            }
            loglik += *freq as f64 * z;
            for &(s, e, lp) in &edges {
                let post = (alpha[s] + lp + beta[e] - z).exp();
                if post > 0.0 {
                    let piece: String = chars[s..e].iter().collect();
                    *expected.entry(piece).or_insert(0.0) += *freq as f64 * post;
                }
            }
        }
        (expected, loglik)
    }

    fn viterbi_counts(&self, model: &UnigramLmModel) -> (HashMap<String, f64>, HashMap<String, f64>) {
        let mut counts: HashMap<String, f64> = HashMap::new();
        let mut containing: HashMap<String, f64> = HashMap::new();
        for (chars, freq) in &self.words {
            let word: String = chars.iter().collect();
            let (pieces, _) = model.viterbi(&word);
            let mut seen: Vec<&String> = Vec::new();
            for p in &pieces {
                *counts.entry(p.clone()).or_insert(0.0) += *freq as f64;
                if !seen.contains(&p) {
                    seen.push(p);
                    *containing.entry(p.clone()).or_insert(0.0) += *freq as f64;
                }
            }
        }
        (counts, containing)
    }
}

fn normalize(counts: &HashMap<String, f64>) -> HashMap<String, f64> {
    let total: f64 = counts.values().sum();
    let log_total = total.ln();
    counts.iter().map(|(p, &c)| (p.clone(), c.ln() - log_total)).collect()
}

fn is_char(p: &str) -> bool {
    p.chars().nth(1).is_none()
}

/// EM training with iterative pruning, seeded from frequent substrings.
/// Single characters are never pruned.
pub fn train_unigram(corpus: &WordCounts, vocab_size: usize) -> Result<UnigramLmModel, SubwordError> {
    train_unigram_with(corpus, vocab_size, &UnigramConfig::default())
}

pub fn train_unigram_with(
    corpus: &WordCounts,
    vocab_size: usize,
    config: &UnigramConfig,
) -> Result<UnigramLmModel, SubwordError> {
    if corpus.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }
    let alphabet = corpus.alphabet_size();
    if vocab_size < alphabet {
        return Err(SubwordError::VocabTooSmall {
            requested: vocab_size,
            alphabet,
        });
    }

    let lattice = Lattice {
        words: corpus
            .sorted()
            .into_iter()
            .map(|(w, f)| (w.chars().collect(), f))
            .collect(),
        config,
    };

    // Seeds: all characters, plus frequent substrings.
    let mut substr: BTreeMap<String, u64> = BTreeMap::new();
    for (chars, freq) in &lattice.words {
        for s in 0..chars.len() {
            for e in s + 1..=chars.len().min(s + config.max_piece_len) {
                *substr.entry(chars[s..e].iter().collect()).or_insert(0) += freq;
            }
        }
    }
    type Counts = Vec<(String, u64)>;
    let (chars, mut multi): (Counts, Counts) = substr.into_iter().partition(|(p, _)| is_char(p));
    multi.retain(|(_, c)| *c >= config.min_seed_freq);
    multi.sort_by(|a, b| {
        let sa = a.1 * a.0.chars().count() as u64;
        let sb = b.1 * b.0.chars().count() as u64;
        sb.cmp(&sa).then_with(|| a.0.cmp(&b.0))
    });
    multi.truncate(config.max_seeds);
    // Multi-character seeds start from frequency times length.
    let seed_counts: HashMap<String, f64> = chars
        .into_iter()
        .map(|(p, c)| (p, c as f64))
        .chain(multi.into_iter().map(|(p, c)| {
            let len = p.chars().count() as f64;
            (p, c as f64 * len)
        }))
        .collect();
    let mut pieces = normalize(&seed_counts);

    loop {
        for _ in 0..config.em_iterations.max(1) {
            pieces = em_step(&lattice, &pieces, config);
        }
        if pieces.len() <= vocab_size {
            break;
        }
        let target = vocab_size.max((pieces.len() as f64 * config.shrink_factor) as usize);
        pieces = prune(&lattice, &pieces, target);
    }
    Ok(UnigramLmModel::new(pieces))
}

/// One EM iteration. The M-step uses the digamma (variational Bayes)
/// update, which favours fewer, longer pieces.
fn em_step(lattice: &Lattice, pieces: &HashMap<String, f64>, config: &UnigramConfig) -> HashMap<String, f64> {
    let (expected, _) = lattice.expected_counts(pieces);
    let mut next: HashMap<String, f64> = HashMap::new();
    for p in pieces.keys() {
        let c = expected.get(p).copied().unwrap_or(0.0);
        if is_char(p) {
            // keep every character reachable
            next.insert(p.clone(), c.max(1e-3));
        } else if c >= config.min_expected_count {
            next.insert(p.clone(), c);
        }
    }
    let total: f64 = next.values().sum();
    let dg_total = digamma(total);
    next.into_iter().map(|(p, c)| (p, digamma(c) - dg_total)).collect()
}

/// Digamma via upward recurrence and the asymptotic series.
fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln()
        - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// Keeps the `target` pieces whose removal would cost the most likelihood.
fn prune(lattice: &Lattice, pieces: &HashMap<String, f64>, target: usize) -> HashMap<String, f64> {
    let model = UnigramLmModel::new(pieces.clone());
    let (counts, containing) = lattice.viterbi_counts(&model);
    let total: f64 = counts.values().sum();
    let total_words: f64 = lattice.words.iter().map(|(_, f)| *f as f64).sum();

    let mut losses: Vec<(String, f64)> = Vec::new();
    for (p, _) in pieces.iter().filter(|(p, _)| !is_char(p)) {
        let freq = counts.get(p).copied().unwrap_or(0.0);
        if freq == 0.0 {
            losses.push((p.clone(), 0.0));
            continue;
        }
        // Re-segment the piece without itself.
        let mut without = pieces.clone();
        without.remove(p);
        let alt = UnigramLmModel::new(without).viterbi(p).0;
        let new_total = total + freq * (alt.len() as f64 - 1.0);
        let lp_piece = freq.ln() - total.ln();
        let lp_alt: f64 = alt
            .iter()
            .map(|a| (counts.get(a).copied().unwrap_or(0.0) + freq).ln() - new_total.ln())
            .sum();
        let weight = containing.get(p).copied().unwrap_or(0.0) / total_words;
        losses.push((p.clone(), weight * (lp_piece - lp_alt)));
    }
    losses.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut kept: HashMap<String, f64> = pieces
        .iter()
        .filter(|(p, _)| is_char(p))
        .map(|(p, lp)| (p.clone(), *lp))
        .collect();
    for (p, _) in losses {
        if kept.len() >= target {
            break;
        }
        kept.insert(p.clone(), pieces[&p]);
    }
    let probs: HashMap<String, f64> = kept.into_iter().map(|(p, lp)| (p, lp.exp())).collect();
    normalize(&probs)
}
