use ontic_core::decoherence::{
    ensemble_density, ensemble_density_closed_form, reduced_system_density, sample_entangled_basis, suppression_sweep,
    BranchWeights, EnvironmentEnsemble,
};
use ontic_core::scalar::max_abs_diff;
use ontic_core::{Complex, SeedStreams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bases_are_complete(n in 1usize..=64, seed in any::<u64>()) {
        let b = sample_entangled_basis::<f64>(n, seed).unwrap();
        prop_assert!(b.completeness_residual() <= 1e-10);
        prop_assert!(b.orthonormality_residual() <= 1e-10);
    }

    #[test]
    fn ensemble_average_is_the_block_form(n in 1usize..=128, seed in any::<u64>(), p in 0.0f64..=1.0) {
        let basis = sample_entangled_basis::<f64>(n, seed).unwrap();
        let env = EnvironmentEnsemble::random(n, &mut SeedStreams::new(seed).stream("phases")).unwrap();
        let w = BranchWeights::new(p).unwrap();
        let mix = ensemble_density(&basis, &env, &w).unwrap();
        prop_assert!(max_abs_diff(mix.matrix(), ensemble_density_closed_form(&env, &w).matrix()) <= 1e-10);
        prop_assert!((mix.trace() - Complex::new(1.0, 0.0)).norm() <= 1e-10);
        prop_assert!(mix.hermiticity_residual() <= 1e-10);
        if n <= 64 {
            prop_assert!(mix.min_eigenvalue() >= -1e-10);
        }
        let r = reduced_system_density(&mix).unwrap();
        prop_assert!((r.trace() - Complex::new(1.0, 0.0)).norm() <= 1e-10);
    }
}

#[test]
fn off_diagonal_suppression_scales_as_inverse_square_root() {
    let w = BranchWeights::new(0.6).unwrap();
    let sweep = suppression_sweep(&[100, 1000, 10_000, 100_000], 100, 31, &w).unwrap();
    assert!((sweep.slope + 0.5).abs() <= 0.1, "slope {}", sweep.slope);
}
