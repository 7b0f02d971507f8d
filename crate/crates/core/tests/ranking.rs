mod common;

use blendkit::rankers::mlm::{rank_by_mlm, rank_pairs_by_mlm, rank_side_by_mlm, MlmContext, MlmOptions};
use blendkit::rankers::{edit_distance, rank_by_edit_distance};
use blendkit::recovery::{lower_bound_ranking, score_ranking, Side};
use common::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn edit_distance_agrees_with_recursion(a in "[abc]{0,6}", b in "[abc]{0,6}") {
        let ca: Vec<char> = a.chars().collect();
        let cb: Vec<char> = b.chars().collect();
        prop_assert_eq!(edit_distance(&a, &b), edit_oracle(&ca, &cb));
    }

    #[test]
    fn edit_distance_is_a_metric(x in "[ab]{0,7}", y in "[ab]{0,7}", z in "[ab]{0,7}") {
        let d = edit_distance;
        prop_assert_eq!(d(&x, &y) == 0, x == y);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert!(d(&x, &y) <= x.chars().count().max(y.chars().count()));
    }
}

#[test]
fn rankings_are_valid_permutations() {
    let mut rng = rng(8);
    let be = HashBackend::new(4);
    for i in 0..50 {
        let c = random_candidates(&mut rng, i, 20);
        for r in [
            rank_by_edit_distance(&c),
            lower_bound_ranking(&c),
            rank_by_mlm(&c, &be, &MlmContext::default(), MlmOptions::default()).unwrap(),
        ] {
            score_ranking(&c, &r).unwrap();
        }
        let lb = score_ranking(&c, &lower_bound_ranking(&c)).unwrap();
        assert_eq!(lb.rank_a, Some(c.side_a.len()));
        assert_eq!(lb.rank_pair, Some(c.side_a.len() * c.side_b.len()));
    }
}

#[test]
fn mlm_order_ignores_probability_scale() {
    let mut rng = rng(21);
    let ctx = MlmContext {
        left: "a".into(),
        right: "b".into(),
    };
    for i in 0..50 {
        let c = random_candidates(&mut rng, i, 20);
        let mut scaled = HashBackend::new(3);
        let base = rank_pairs_by_mlm(&c, &scaled, &ctx, MlmOptions::default()).unwrap();
        scaled.scale = 0.25;
        assert_eq!(
            rank_pairs_by_mlm(&c, &scaled, &ctx, MlmOptions::default()).unwrap(),
            base
        );
    }
}

/// Single-side order: expansion keys compared depth by depth, exhausted
/// candidates first.
fn side_oracle(be: &HashBackend, words: &[String]) -> Vec<String> {
    let key = |w: &String| {
        let p = HashBackend::pieces(w);
        let mut k = Vec::new();
        for d in 0..=p.len() {
            if d == p.len() {
                k.push((0, 0.0, String::new()));
                break;
            }
            let mut t = p[..d].to_vec();
            t.push(be.info.mask.clone());
            k.push((1, -be.prob(&t, 0, &p[d]), p[d].clone()));
        }
        k
    };
    type Keyed = (Vec<(i32, f64, String)>, String);
    let mut v: Vec<Keyed> = words.iter().map(|w| (key(w), w.clone())).collect();
    v.sort_by(|(k1, w1), (k2, w2)| {
        for (x, y) in k1.iter().zip(k2) {
            let o = x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then_with(|| x.2.cmp(&y.2));
            if o.is_ne() {
                return o;
            }
            if x.0 == 0 {
                break;
            }
        }
        w1.cmp(w2)
    });
    v.into_iter().map(|(_, w)| w).collect()
}

#[test]
fn mlm_side_ranking_matches_oracle() {
    let mut rng = rng(4);
    let opts = MlmOptions {
        plus_other_base: false,
        context: false,
    };
    for levels in [2, 5] {
        let be = HashBackend::new(levels);
        for i in 0..60 {
            let c = random_candidates(&mut rng, i, 25);
            for side in [Side::A, Side::B] {
                let got = rank_side_by_mlm(&c, side, &be, &MlmContext::default(), opts).unwrap();
                assert_eq!(got, side_oracle(&be, c.side(side)), "{c:?} {side:?}");
            }
        }
    }
}
