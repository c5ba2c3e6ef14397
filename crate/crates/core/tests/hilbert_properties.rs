use ontic_core::hilbert::{
    apply_unitary, delta_state, hamiltonian_from_permutation, schrodinger_evolve, unitary_from_permutation, WaveFunction,
};
use ontic_core::nalgebra::DVector;
use ontic_core::ontic::{OnticState, PermutationMap};
use ontic_core::scalar::max_abs_diff;
use ontic_core::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type C = Complex<f64>;

fn random_vector(n: usize, rng: &mut impl Rng) -> DVector<C> {
    DVector::from_fn(n, |_, _| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn delta_states_do_not_spread(n in 1usize..=128, seed in any::<u64>(), k in any::<prop::sample::Index>(), t in 0u64..5000) {
        let m = PermutationMap::random(n, &mut ChaCha20Rng::seed_from_u64(seed));
        let h = hamiltonian_from_permutation::<f64>(&m).unwrap();
        let k = k.index(n);
        let psi = schrodinger_evolve(&delta_state(OnticState(k), n).unwrap(), &h, t as f64).unwrap();
        let landed = m.evolve(OnticState(k), t).unwrap().index();
        for (j, a) in psi.amplitudes().iter().enumerate() {
            if j == landed {
                prop_assert!(a.norm() >= 1.0 - 1e-8);
            } else {
                prop_assert!(a.norm() <= 1e-8);
            }
        }
        prop_assert!((psi.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn exponential_of_hamiltonian_is_the_step(n in 1usize..=256, seed in any::<u64>()) {
        let m = PermutationMap::random(n, &mut ChaCha20Rng::seed_from_u64(seed));
        let h = hamiltonian_from_permutation::<f64>(&m).unwrap();
        let u = unitary_from_permutation(&m).to_dense::<f64>();
        prop_assert!(max_abs_diff(&h.propagator(1.0), &u) <= 1e-10);
        prop_assert!(h.eigenphases().iter().all(|&p| (0.0..std::f64::consts::TAU).contains(&p)));
        prop_assert!(h.orthonormality_residual() <= 1e-10);
    }

    #[test]
    fn energy_and_norm_are_conserved(n in 2usize..=64, seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = PermutationMap::random(n, &mut rng);
        let h = hamiltonian_from_permutation::<f64>(&m).unwrap();
        let psi0 = WaveFunction::normalized(random_vector(n, &mut rng)).unwrap();
        let e0 = h.energy(&psi0).unwrap();
        for step in 0..40 {
            let t = step as f64 * 0.37;
            let psi = schrodinger_evolve(&psi0, &h, t).unwrap();
            prop_assert!((h.energy(&psi).unwrap() - e0).abs() <= 1e-9);
            prop_assert!((psi.norm() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn evolution_is_linear(n in 1usize..=48, seed in any::<u64>(), t in -20.0f64..20.0) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = PermutationMap::random(n, &mut rng);
        let h = hamiltonian_from_permutation::<f64>(&m).unwrap();
        let a = WaveFunction::normalized(random_vector(n, &mut rng)).unwrap().into_amplitudes();
        let b = WaveFunction::normalized(random_vector(n, &mut rng)).unwrap().into_amplitudes();
        let (lambda, mu) = (C::new(0.6, -0.2), C::new(-0.3, 0.9));
        let combined = h.evolve_vector(&(&a * lambda + &b * mu), t).unwrap();
        let separate = h.evolve_vector(&a, t).unwrap() * lambda + h.evolve_vector(&b, t).unwrap() * mu;
        for (x, y) in combined.iter().zip(separate.iter()) {
            prop_assert!((x - y).norm() <= 1e-10);
        }
    }
}

#[test]
fn sparse_path_scales_to_ten_million_states() {
    let n = 10_000_000;
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let m = PermutationMap::random(n, &mut rng);
    let u = unitary_from_permutation(&m);
    let k = 1_234_567;
    let mut psi = delta_state::<f64>(OnticState(k), n).unwrap();
    for _ in 0..3 {
        psi = apply_unitary(&psi, &u).unwrap();
    }
    let landed = m.evolve(OnticState(k), 3).unwrap().index();
    assert_eq!(psi.amplitudes()[landed], C::new(1.0, 0.0));
    let jumped = u.power(3).apply(&delta_state::<f64>(OnticState(k), n).unwrap()).unwrap();
    assert_eq!(jumped.amplitudes()[landed], C::new(1.0, 0.0));
}
