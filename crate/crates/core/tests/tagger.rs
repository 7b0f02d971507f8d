mod common;

use blendkit::dataset::PaxobsLabeling;
use blendkit::tagger::{char_accuracy, train_tagger, TaggerConfig, TaggerModel};
use common::*;
use proptest::prelude::*;

fn trained() -> TaggerModel {
    let ex: Vec<(String, PaxobsLabeling)> = TAGGER_TRAIN
        .iter()
        .map(|(w, l)| (w.to_string(), l.parse().unwrap()))
        .collect();
    train_tagger(&ex, TaggerConfig { epochs: 10, seed: 13 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn output_length_matches_input(w in "\\PC{0,20}") {
        let m = trained();
        let n = w.chars().count();
        prop_assert_eq!(m.tag(&w).len(), n);
        prop_assert_eq!(m.segment(&w).len(), n);
    }
}

#[test]
fn same_seed_same_model_and_json_round_trip() {
    let a = trained();
    let b = trained();
    let (mut ja, mut jb) = (Vec::new(), Vec::new());
    a.write_json(&mut ja).unwrap();
    b.write_json(&mut jb).unwrap();
    assert_eq!(ja, jb);
    let back = TaggerModel::read_json(ja.as_slice()).unwrap();
    for (w, _) in TAGGER_TRAIN {
        assert_eq!(back.tag(w), a.tag(w));
    }
}

#[test]
fn memorizes_training_set() {
    let ex: Vec<(String, PaxobsLabeling)> = TAGGER_TRAIN
        .iter()
        .map(|(w, l)| (w.to_string(), l.parse().unwrap()))
        .collect();
    let m = train_tagger(&ex, TaggerConfig::default()).unwrap();
    assert!(char_accuracy(&m, &ex) >= 0.9);
}
