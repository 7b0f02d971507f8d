mod common;

use std::collections::HashMap;

use blendkit::segment::{Segmenter, SubwordSegmenter};
use blendkit::subword::{train_bpe, train_unigram, BpeModel, SubwordModel, UnigramLmModel, WordCounts, WordPieceVocab};
use blendkit::text::Normalizer;
use common::*;
use proptest::prelude::*;
use rand::Rng;

const TEXT: &str = "the brunch crowd ate lunch after breakfast while the smog and the fog rolled in \
                    motels and hotels lined the motorway spoons and forks and sporks";

fn bpe() -> BpeModel {
    let wc = WordCounts::from_text(TEXT, Normalizer::default());
    train_bpe(&wc, 60).unwrap()
}

proptest! {
    #[test]
    fn bpe_pieces_concatenate_to_the_word(w in "[a-z]{1,12}") {
        let m = bpe();
        let pieces = m.encode(&w).unwrap();
        prop_assert_eq!(pieces.concat(), w.clone());
        let seg = SubwordSegmenter::new("bpe", m).segment(&w).unwrap();
        prop_assert_eq!(seg.num_segments(), pieces.len());
    }

    #[test]
    fn wordpiece_with_fallback_covers_any_word(w in "[a-z]{1,12}") {
        let v = WordPieceVocab::new(["sp", "spo", "##rk", "##o", "fo", "##g"]).with_char_fallback(true);
        let pieces = v.encode(&w).unwrap();
        let joined: String = pieces.iter().map(|p| p.trim_start_matches("##")).collect();
        prop_assert_eq!(joined, w);
    }
}

#[test]
fn bpe_model_file_round_trip() {
    let m = bpe();
    let mut buf = Vec::new();
    m.write(&mut buf).unwrap();
    let back = BpeModel::read(buf.as_slice()).unwrap();
    assert_eq!(back.merges(), m.merges());
    for w in TEXT.split_whitespace() {
        assert_eq!(back.encode(w).unwrap(), m.encode(w).unwrap());
    }
}

#[test]
fn unigram_training_then_viterbi_is_optimal() {
    let wc = WordCounts::from_text(TEXT, Normalizer::default());
    let m = train_unigram(&wc, 50).unwrap();
    let mut buf = Vec::new();
    m.write(&mut buf).unwrap();
    let back = UnigramLmModel::read(buf.as_slice()).unwrap();
    let mut rng = rng(3);
    let alphabet: Vec<char> = "abcdefhlmnorstu".chars().collect();
    for _ in 0..100 {
        let w = random_word(&mut rng, &alphabet, 1, 10);
        let (pieces, score) = back.viterbi(&w);
        assert_eq!(pieces.concat(), w);
        assert!((score - unigram_brute_force(&back, &w)).abs() < 1e-9, "{w}");
    }
}

#[test]
fn unigram_viterbi_with_random_vocabularies() {
    let mut rng = rng(17);
    let alphabet: Vec<char> = "xyz".chars().collect();
    for _ in 0..20 {
        let mut pieces = HashMap::new();
        for _ in 0..rng.gen_range(3..15) {
            pieces.insert(random_word(&mut rng, &alphabet, 1, 3), -rng.gen_range(0.1..5.0));
        }
        let m = UnigramLmModel::new(pieces);
        for _ in 0..20 {
            let w = random_word(&mut rng, &alphabet, 1, 10);
            let (p, score) = m.viterbi(&w);
            assert!((score - unigram_brute_force(&m, &w)).abs() < 1e-9);
            assert!((piece_score(&m, &p) - score).abs() < 1e-9);
        }
    }
}
