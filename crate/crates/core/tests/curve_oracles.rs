//! AUROC / AUPR against exhaustive threshold enumeration.

mod oracles;

use gradmeta::meta::{aupr_in, aupr_out, auroc, ScoredSample};
use oracles::{brute_aupr, brute_auroc, flip, random_instance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn thousand_instances_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let v = random_instance(&mut rng);
        assert!((auroc(&v, true).unwrap() - brute_auroc(&v)).abs() <= 1e-12);
        assert!((aupr_in(&v, true).unwrap() - brute_aupr(&v)).abs() <= 1e-12);
        assert!((aupr_out(&v, true).unwrap() - brute_aupr(&flip(&v))).abs() <= 1e-12);
        // low-is-positive orientation equals negating the scores
        let neg: Vec<_> = v.iter().map(|s| ScoredSample::new(-s.score, s.is_positive)).collect();
        assert_eq!(auroc(&v, false).unwrap(), auroc(&neg, true).unwrap());
        assert_eq!(aupr_in(&v, false).unwrap(), aupr_in(&neg, true).unwrap());
    }
}

#[test]
fn random_scores_give_prior_as_aupr() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pi = 0.3;
    let v: Vec<_> = (0..10_000)
        .map(|_| ScoredSample::new(rng.random::<f64>(), rng.random_bool(pi)))
        .collect();
    let a = aupr_in(&v, true).unwrap();
    assert!((a - pi).abs() < 0.02, "aupr {a}");
}

fn instance() -> impl Strategy<Value = Vec<ScoredSample>> {
    proptest::collection::vec((0i32..6, any::<bool>()), 2..30).prop_map(|raw| {
        let mut v: Vec<_> = raw
            .into_iter()
            .map(|(s, p)| ScoredSample::new(f64::from(s) * 0.5, p))
            .collect();
        v[0].is_positive = true;
        v[1].is_positive = false;
        v
    })
}

proptest! {
    #[test]
    fn aupr_out_is_aupr_in_of_flipped(v in instance()) {
        prop_assert_eq!(aupr_out(&v, true).unwrap(), aupr_in(&flip(&v), true).unwrap());
        prop_assert_eq!(aupr_out(&v, false).unwrap(), aupr_in(&flip(&v), false).unwrap());
    }

    #[test]
    fn auroc_symmetries(v in instance()) {
        let a = auroc(&v, true).unwrap();
        let complemented: Vec<_> = v.iter().map(|s| ScoredSample::new(s.score, !s.is_positive)).collect();
        prop_assert!((auroc(&complemented, true).unwrap() - (1.0 - a)).abs() < 1e-12);
        prop_assert!((auroc(&v, false).unwrap() - (1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn areas_lie_in_unit_interval(v in instance()) {
        for x in [auroc(&v, true).unwrap(), aupr_in(&v, true).unwrap(), aupr_out(&v, true).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }
}
