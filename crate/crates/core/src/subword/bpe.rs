use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::io::{BufRead, Write};

use super::{SubwordError, SubwordModel, WordCounts};

/// Merge list learned by [`train_bpe`], applied in training order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    vocab: BTreeSet<String>,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>, alphabet: impl IntoIterator<Item = char>) -> Self {
        let mut vocab: BTreeSet<String> = alphabet.into_iter().map(String::from).collect();
        for (l, r) in &merges {
            for c in l.chars().chain(r.chars()) {
                vocab.insert(c.to_string());
            }
            vocab.insert(format!("{l}{r}"));
        }
        let ranks = merges.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        BpeModel { merges, vocab, ranks }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    /// One `left right` pair per line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, SubwordError> {
        let mut merges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => {
                    return Err(SubwordError::BadModelFile {
                        line: i + 1,
                        msg: "expected \"left right\"".into(),
                    })
                }
            }
        }
        Ok(BpeModel::from_merges(merges, std::iter::empty()))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), SubwordError> {
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}")?;
        }
        Ok(())
    }
}

impl SubwordModel for BpeModel {
    fn encode(&self, word: &str) -> Result<Vec<String>, SubwordError> {
        if word.is_empty() {
            return Err(SubwordError::EmptyWord);
        }
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == l && &symbols[i + 1] == r {
                    merged.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
        }
        Ok(symbols)
    }
}

type Pair = (u32, u32);

/// Heap entry: highest count first, then the lexicographically smallest pair.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: String,
    right: String,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Trainer {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    counts: HashMap<Pair, u64>,
    locations: HashMap<Pair, HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Trainer {
    fn intern(&mut self, s: String) -> u32 {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.ids.insert(s.clone(), id);
        self.symbols.push(s);
        id
    }

    fn push(&mut self, pair: Pair) {
        let count = self.counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            self.heap.push(Candidate {
                count,
                left: self.symbols[pair.0 as usize].clone(),
                right: self.symbols[pair.1 as usize].clone(),
                pair,
            });
        }
    }

    fn pop_best(&mut self) -> Option<Pair> {
        while let Some(c) = self.heap.pop() {
            if self.counts.get(&c.pair).copied().unwrap_or(0) == c.count {
                return Some(c.pair);
            }
        }
        None
    }

    fn merge(&mut self, pair: Pair, new_id: u32) {
        let mut touched = HashSet::new();
        let mut locs: Vec<usize> = self
            .locations
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        locs.sort_unstable();
        for idx in locs {
            let (old, freq) = {
                let (w, f) = &self.words[idx];
                (w.clone(), *f)
            };
            let mut new = Vec::with_capacity(old.len());
            let mut i = 0;
            let mut changed = false;
            while i < old.len() {
                if i + 1 < old.len() && (old[i], old[i + 1]) == pair {
                    new.push(new_id);
                    i += 2;
                    changed = true;
                } else {
                    new.push(old[i]);
                    i += 1;
                }
            }
            if !changed {
                continue;
            }
            for w in old.windows(2) {
                let p = (w[0], w[1]);
                if let Some(c) = self.counts.get_mut(&p) {
                    *c -= freq;
                }
                touched.insert(p);
            }
            for w in new.windows(2) {
                let p = (w[0], w[1]);
                *self.counts.entry(p).or_insert(0) += freq;
                self.locations.entry(p).or_default().insert(idx);
                touched.insert(p);
            }
            self.words[idx].0 = new;
        }
        self.counts.remove(&pair);
        let mut touched: Vec<Pair> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            if p != pair {
                self.push(p);
            }
        }
    }
}

/// Greedy BPE: repeatedly merge the most frequent adjacent pair until the
/// vocabulary (alphabet plus merge outputs) reaches `vocab_size` or no pair
/// remains. Ties go to the lexicographically smaller `(left, right)` pair.
pub fn train_bpe(corpus: &WordCounts, vocab_size: usize) -> Result<BpeModel, SubwordError> {
    if corpus.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }
    let alphabet_size = corpus.alphabet_size();
    if vocab_size < alphabet_size {
        return Err(SubwordError::VocabTooSmall {
            requested: vocab_size,
            alphabet: alphabet_size,
        });
    }

    let mut t = Trainer {
        symbols: Vec::new(),
        ids: HashMap::new(),
        words: Vec::new(),
        counts: HashMap::new(),
        locations: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    let mut alphabet: BTreeSet<char> = BTreeSet::new();
    for (word, freq) in corpus.sorted() {
        let ids: Vec<u32> = word
            .chars()
            .map(|c| {
                alphabet.insert(c);
                t.intern(c.to_string())
            })
            .collect();
        let idx = t.words.len();
        for w in ids.windows(2) {
            let p = (w[0], w[1]);
            *t.counts.entry(p).or_insert(0) += freq;
            t.locations.entry(p).or_default().insert(idx);
        }
        t.words.push((ids, freq));
    }
    let mut pairs: Vec<Pair> = t.counts.keys().copied().collect();
    pairs.sort_unstable();
    for p in pairs {
        t.push(p);
    }

    let mut vocab: BTreeSet<String> = alphabet.iter().map(|c| c.to_string()).collect();
    let mut merges = Vec::new();
    while vocab.len() < vocab_size {
        let Some(pair) = t.pop_best() else { break };
        let left = t.symbols[pair.0 as usize].clone();
        let right = t.symbols[pair.1 as usize].clone();
        let merged = format!("{left}{right}");
        let new_id = t.intern(merged.clone());
        t.merge(pair, new_id);
        vocab.insert(merged);
        merges.push((left, right));
    }
    Ok(BpeModel::from_merges(merges, alphabet))
}
