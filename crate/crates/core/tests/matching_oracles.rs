//! Matchers against exhaustive search.

mod common;

use mimomate::channel::ClientId;
use mimomate::matching::{follower_weight, mwmcm_bipartite, n_mimomate, pair_weights, two_mimomate, MatchingConfig, WeightMatrix};
use mimomate::oracle::{best_fair_assignment, brute_force_three_mimomate, brute_force_two_mimomate, verify_theorems};
use mimomate::rate::RateTable;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn total(w: &WeightMatrix, pairs: &[(ClientId, ClientId)]) -> f64 {
    pairs.iter().map(|&(u, v)| w.weight(u, v).unwrap()).sum()
}

#[test]
fn pairs_on_real_channels_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let table = RateTable::simulation();
    for _ in 0..300 {
        let n = rng.random_range(2..=7);
        let (channels, snrs) = common::random_cell(&mut rng, n, 2);
        let w = pair_weights(&channels, &snrs, &table).unwrap();
        let fast = two_mimomate(&channels, &snrs, &table).unwrap();
        let slow = brute_force_two_mimomate(&w).unwrap();
        fast.check_structure(2).unwrap();
        assert_eq!(fast.len(), slow.len());
        assert_eq!(total(&w, &fast.pairs()), total(&w, &slow.pairs()));
    }
}

#[test]
fn two_layers_reduce_to_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let table = RateTable::simulation();
    for _ in 0..100 {
        let (channels, snrs) = common::random_cell(&mut rng, 6, 2);
        let pairs = two_mimomate(&channels, &snrs, &table).unwrap();
        let layered = n_mimomate(&channels, &snrs, &table, &MatchingConfig::new(2)).unwrap();
        assert_eq!(pairs, layered);
    }
}

#[test]
fn layered_triples_are_feasible_and_never_beat_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let table = RateTable::simulation();
    for _ in 0..100 {
        let (channels, snrs) = common::random_cell(&mut rng, 5, 3);
        let mates = n_mimomate(&channels, &snrs, &table, &MatchingConfig::new(3)).unwrap();
        mates.check_structure(3).unwrap();
        let triple = |u: ClientId, v: ClientId, x: ClientId| {
            let rv = follower_weight(&[&channels[u]], &channels[v], snrs[v], &table).ok()??;
            let rx = follower_weight(&[&channels[u], &channels[v]], &channels[x], snrs[x], &table).ok()??;
            Some((rv, rx))
        };
        let best = brute_force_three_mimomate(&[0, 1, 2, 3, 4], triple).unwrap();
        assert!(mates.count_of_len(3) <= best.cardinality);
        best.mates.check_structure(3).unwrap();
    }
}

#[test]
fn legacy_clients_only_lead() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let table = RateTable::simulation();
    for _ in 0..50 {
        let (channels, snrs) = common::random_cell(&mut rng, 7, 3);
        let cfg = MatchingConfig::new(3).with_legacy([0, 2]);
        let mates = n_mimomate(&channels, &snrs, &table, &cfg).unwrap();
        for r in mates.relations() {
            assert!(!r[1..].contains(&0) && !r[1..].contains(&2), "{r:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matcher_equals_enumeration_on_positive_weights(seed in any::<u64>(), n in 2usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = common::dyadic_weights(&mut rng, n);
        let fast = mwmcm_bipartite(&w, &MatchingConfig::new(2)).unwrap();
        let slow = brute_force_two_mimomate(&w).unwrap();
        prop_assert_eq!(fast.len(), n);
        prop_assert_eq!(total(&w, &fast.pairs()), total(&w, &slow.pairs()));
    }

    #[test]
    fn matching_is_the_best_fair_assignment(seed in any::<u64>(), n in 3usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = common::dyadic_weights(&mut rng, n);
        let r = verify_theorems(&w).unwrap();
        prop_assert!(r.verdict);
        prop_assert!(r.matches_fair_optimum());
        prop_assert!(r.uniform_margin() >= 0.0);
        best_fair_assignment(&w).unwrap().assignment.check_fair().unwrap();
    }

    #[test]
    fn matcher_output_is_structurally_valid(seed in any::<u64>(), n in 2usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<Vec<f64>> = (0..n)
            .map(|u| (0..n).map(|v| if u != v && rng.random_bool(0.6) { rng.random_range(1..=54) as f64 } else { 0.0 }).collect())
            .collect();
        let w = WeightMatrix::from_dense(&table).unwrap();
        let m = mwmcm_bipartite(&w, &MatchingConfig::new(2)).unwrap();
        prop_assert!(m.check_structure(2).is_ok());
        for (u, v) in m.pairs() {
            prop_assert!(w.weight(u, v).unwrap_or(0.0) > 0.0);
        }
    }
}
