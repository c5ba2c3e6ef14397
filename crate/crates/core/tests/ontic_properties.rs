use ontic_core::ontic::{OnticState, OutcomeLabeling, PermutationMap};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn permutation(max: usize) -> impl Strategy<Value = PermutationMap> {
    (1..=max, any::<u64>()).prop_map(|(n, seed)| PermutationMap::random(n, &mut ChaCha20Rng::seed_from_u64(seed)))
}

proptest! {
    #[test]
    fn accepted_maps_are_bijections(targets in prop::collection::vec(0usize..12, 1..12)) {
        if let Ok(m) = PermutationMap::new(targets.clone()) {
            let mut sorted = m.targets().to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..targets.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn inverse_undoes_evolution(m in permutation(1000), k in any::<prop::sample::Index>(), t in 0u64..=1000) {
        let s = OnticState(k.index(m.size()));
        let there = m.evolve(s, t).unwrap();
        prop_assert_eq!(m.inverse().evolve(there, t).unwrap(), s);
    }

    #[test]
    fn orbits_close_after_their_length(m in permutation(300)) {
        let cycles = m.cycle_decomposition();
        for c in cycles.cycles() {
            for &s in c {
                prop_assert_eq!(m.evolve(OnticState(s), c.len() as u64).unwrap(), OnticState(s));
            }
        }
    }

    #[test]
    fn classification_after_evolution_is_deterministic(seed in any::<u64>(), t in 0u64..10_000) {
        let build = || {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let m = PermutationMap::random(200, &mut rng);
            let l = OutcomeLabeling::live_bernoulli(200, 0.6, &mut rng).unwrap();
            (0..200).map(|k| l.classify(m.evolve(OnticState(k), t).unwrap()).unwrap()).collect::<Vec<_>>()
        };
        prop_assert_eq!(build(), build());
    }

    #[test]
    fn modular_and_iterated_evolution_agree(m in permutation(60), t in 0u64..500) {
        let cycles = m.cycle_decomposition();
        for k in 0..m.size() {
            let mut s = OnticState(k);
            for _ in 0..t {
                s = m.step(s).unwrap();
            }
            prop_assert_eq!(m.evolve(OnticState(k), t).unwrap(), s);
            prop_assert_eq!(cycles.evolve(OnticState(k), t).unwrap(), s);
        }
    }
}

#[test]
fn reversibility_exhaustive_at_desk_scale() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    for n in [1, 2, 17, 256, 1000] {
        let m = PermutationMap::random(n, &mut rng);
        let inv = m.inverse();
        for t in [0, 1, 7, 333, 1000] {
            let forward = m.power(t);
            let back = inv.power(t);
            assert!(back.compose(&forward).unwrap().is_identity(), "n={n} t={t}");
        }
    }
}
