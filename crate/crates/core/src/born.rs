//! Born-rule probabilities as relative abundances of initial ontic states.
//!
//! The quantum side computes `Σ |amplitude|²` per outcome class of a template
//! state. The ontic side never builds amplitudes: it draws initial states with
//! equal prior weight, runs them through the deterministic map, and counts
//! where they land.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, domain, Result};
use crate::hilbert::WaveFunction;
use crate::ontic::{OutcomeLabeling, PermutationMap};
use crate::scalar::Real;
use crate::seeding::SeedStreams;

/// A conventional quantum state viewed as a superposition of ontic states.
#[derive(Debug, Clone, PartialEq)]
pub struct Template<T: Real> {
    state: WaveFunction<T>,
    description: String,
}

impl<T: Real> Template<T> {
    pub fn new(state: WaveFunction<T>, description: impl Into<String>) -> Self {
        Template { state, description: description.into() }
    }

    /// `Σ_c √w_c · (uniform superposition over class c)`; `weights` are per
    /// label in alphabet order and must sum to 1.
    pub fn from_class_weights(labeling: &OutcomeLabeling, weights: &[T]) -> Result<Self> {
        check_dim(labeling.names().len(), weights.len())?;
        if weights.iter().any(|&w| !(w >= T::zero())) {
            return domain("class weights must be non-negative");
        }
        let counts = labeling.class_counts();
        for (c, (&w, &count)) in weights.iter().zip(&counts).enumerate() {
            if count == 0 && w > T::zero() {
                return domain(format!("class '{}' has weight {w} but no states", labeling.name(c)));
            }
        }
        let amps = labeling
            .labels()
            .iter()
            .map(|&c| {
                let a = (weights[c] / T::of_usize(counts[c] as usize)).sqrt();
                num_complex::Complex::new(a, T::zero())
            })
            .collect();
        let state = WaveFunction::from_vec(amps)?;
        Ok(Template { state, description: format!("class superposition over {:?}", labeling.names()) })
    }

    pub fn state(&self) -> &WaveFunction<T> {
        &self.state
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// `Σ |amplitude|²` over the states of each label, in alphabet order.
pub fn born_probabilities<T: Real>(template: &Template<T>, labeling: &OutcomeLabeling) -> Result<Vec<T>> {
    check_dim(labeling.size(), template.state.len())?;
    let mut p = vec![T::zero(); labeling.names().len()];
    for (&label, prob) in labeling.labels().iter().zip(template.state.probabilities()) {
        p[label] += prob;
    }
    Ok(p)
}

/// Outcome frequencies from a run over initial ontic states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// `√(f(1−f)/M)` per label.
    pub std_errors: Vec<f64>,
    /// Filled in by [`compare_frequencies`]'s caller when a prediction exists.
    pub z_scores: Option<Vec<f64>>,
    pub samples: u64,
    pub steps: u64,
    pub seed: u64,
    pub exhaustive: bool,
}

impl EnsembleReport {
    fn from_counts(labels: &[String], counts: Vec<u64>, steps: u64, seed: u64, exhaustive: bool) -> Self {
        let samples: u64 = counts.iter().sum();
        let m = samples as f64;
        let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
        let std_errors = frequencies.iter().map(|&f| (f * (1.0 - f) / m).sqrt()).collect();
        EnsembleReport {
            labels: labels.to_vec(),
            counts,
            frequencies,
            std_errors,
            z_scores: None,
            samples,
            steps,
            seed,
            exhaustive,
        }
    }

    pub fn frequency_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.frequencies[i])
    }
}

/// How [`sample_ontic_frequencies`] visits initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingOptions {
    /// Enumerate every initial state once instead of sampling when `M ≥ N`.
    pub exhaustive: bool,
    /// Draws per independent random sub-stream.
    pub batch_size: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions { exhaustive: false, batch_size: 1 << 16 }
    }
}

/// Draws `samples` initial states uniformly (probability `1/N` each), evolves
/// each for `steps` steps, and counts the labels of the final states.
///
/// Batches of draws use disjoint sub-streams of `seed` and run on the current
/// rayon pool; counts are summed exactly, so the report depends only on the
/// inputs.
pub fn sample_ontic_frequencies(
    m: &PermutationMap,
    labeling: &OutcomeLabeling,
    steps: u64,
    samples: u64,
    seed: u64,
) -> Result<EnsembleReport> {
    sample_ontic_frequencies_with(m, labeling, steps, samples, seed, SamplingOptions::default())
}

pub fn sample_ontic_frequencies_with(
    m: &PermutationMap,
    labeling: &OutcomeLabeling,
    steps: u64,
    samples: u64,
    seed: u64,
    options: SamplingOptions,
) -> Result<EnsembleReport> {
    check_dim(m.size(), labeling.size())?;
    if samples == 0 {
        return domain("need at least one sample");
    }
    if options.batch_size == 0 {
        return domain("batch size must be positive");
    }
    let n = m.size();
    if options.exhaustive && samples >= n as u64 {
        return enumerate_ontic_frequencies(m, labeling, steps, seed);
    }
    let cycles = m.cycle_decomposition();
    let labels = labeling.labels();
    let classes = labeling.names().len();
    let streams = SeedStreams::new(seed);
    let batches = samples.div_ceil(options.batch_size);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = streams.substream("sampling", b);
            let draws = options.batch_size.min(samples - b * options.batch_size);
            let mut local = vec![0_u64; classes];
            for _ in 0..draws {
                let k = rng.random_range(0..n);
                local[labels[cycles.advance(k, steps)]] += 1;
            }
            local
        })
        .reduce(
            || vec![0_u64; classes],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(EnsembleReport::from_counts(labeling.names(), counts, steps, seed, false))
}

/// Every initial state exactly once; no statistical error.
pub fn enumerate_ontic_frequencies(m: &PermutationMap, labeling: &OutcomeLabeling, steps: u64, seed: u64) -> Result<EnsembleReport> {
    check_dim(m.size(), labeling.size())?;
    let cycles = m.cycle_decomposition();
    let mut counts = vec![0_u64; labeling.names().len()];
    for k in 0..m.size() {
        counts[labeling.labels()[cycles.advance(k, steps)]] += 1;
    }
    Ok(EnsembleReport::from_counts(labeling.names(), counts, steps, seed, true))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbundanceReport {
    pub labels: Vec<String>,
    /// Class counts of the final-time labeling.
    pub final_counts: Vec<u64>,
    /// Class counts of the pulled-back initial-time labeling.
    pub pullback_counts: Vec<u64>,
    /// Class counts of the population after stepping every state forward one
    /// step at a time.
    pub forward_counts: Vec<u64>,
    pub conserved: bool,
}

/// Checks that evolving the whole population neither creates nor destroys
/// members of any outcome class.
///
/// Two independent routes are compared with the final labeling: the pullback
/// `k ↦ l(m^T(k))` built from the cycle structure, and the population pushed
/// forward by `T` single steps (capped at `N` steps, after which it repeats
/// with period dividing `N!`; the cycle route covers larger `T`).
pub fn abundance_conservation_check(m: &PermutationMap, l_final: &OutcomeLabeling, steps: u64) -> Result<AbundanceReport> {
    check_dim(m.size(), l_final.size())?;
    let pullback = l_final.pullback(m, steps)?;
    let n = m.size();
    let forward_counts = if steps <= n as u64 {
        let mut population: Vec<usize> = (0..n).collect();
        for _ in 0..steps {
            for s in population.iter_mut() {
                *s = m.targets()[*s];
            }
        }
        let mut counts = vec![0_u64; l_final.names().len()];
        for s in population {
            counts[l_final.labels()[s]] += 1;
        }
        counts
    } else {
        enumerate_ontic_frequencies(m, l_final, steps, 0)?.counts
    };
    let final_counts = l_final.class_counts();
    let pullback_counts = pullback.class_counts();
    let conserved = final_counts == pullback_counts && final_counts == forward_counts;
    Ok(AbundanceReport { labels: l_final.names().to_vec(), final_counts, pullback_counts, forward_counts, conserved })
}

/// `|z|` above which an observed frequency is flagged.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyComparison {
    /// `(f − p)/√(p(1−p)/M)` per label; `0` when `p ∈ {0,1}` and `f = p`,
    /// `±∞` when such an outcome is contradicted.
    pub z_scores: Vec<f64>,
    /// Labels with `|z| > Z_THRESHOLD`.
    pub flagged: Vec<String>,
    /// Labels predicted impossible (or certain) but observed otherwise.
    pub impossible: Vec<String>,
}

impl FrequencyComparison {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty() && self.impossible.is_empty()
    }
}

pub fn compare_frequencies(report: &EnsembleReport, predicted: &[f64]) -> Result<FrequencyComparison> {
    check_dim(report.labels.len(), predicted.len())?;
    if predicted.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return domain("predicted probabilities must lie in [0, 1]");
    }
    let m = report.samples as f64;
    let mut z_scores = Vec::with_capacity(predicted.len());
    let mut flagged = Vec::new();
    let mut impossible = Vec::new();
    for ((label, &f), &p) in report.labels.iter().zip(&report.frequencies).zip(predicted) {
        let z = if p == 0.0 || p == 1.0 {
            if f == p {
                0.0
            } else {
                impossible.push(label.clone());
                (f - p).signum() * f64::INFINITY
            }
        } else {
            (f - p) / (p * (1.0 - p) / m).sqrt()
        };
        if z.abs() > Z_THRESHOLD && z.is_finite() {
            flagged.push(label.clone());
        }
        z_scores.push(z);
    }
    Ok(FrequencyComparison { z_scores, flagged, impossible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontic::{OnticState, DEAD, LIVE};
    use nalgebra::DVector;
    use num_complex::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn delta_template_is_certain() {
        let l = OutcomeLabeling::live_prefix(10, 6).unwrap();
        let t = Template::new(WaveFunction::<f64>::delta(OnticState(2), 10).unwrap(), "delta");
        assert_eq!(born_probabilities(&t, &l).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn class_superposition_gives_sixty_forty() {
        let l = OutcomeLabeling::live_shuffled(1000, 370, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let t = Template::<f64>::from_class_weights(&l, &[0.6, 0.4]).unwrap();
        let p = born_probabilities(&t, &l).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.4).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probabilities_match_per_state_accumulation() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let l = OutcomeLabeling::live_bernoulli(100, 0.5, &mut rng).unwrap();
        let v = DVector::from_fn(100, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let t = Template::new(WaveFunction::normalized(v).unwrap(), "random");
        let p = born_probabilities(&t, &l).unwrap();
        let mut live = 0.0;
        let mut dead = 0.0;
        for k in 0..100 {
            let a = t.state().amplitudes()[k];
            if l.name(l.labels()[k]) == LIVE {
                live += a.re * a.re + a.im * a.im;
            } else {
                dead += a.re * a.re + a.im * a.im;
            }
        }
        assert!((p[0] - live).abs() < 1e-14 && (p[1] - dead).abs() < 1e-14);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let l = OutcomeLabeling::live_prefix(4, 2).unwrap();
        let t = Template::new(WaveFunction::<f64>::delta(OnticState(0), 5).unwrap(), "");
        assert!(born_probabilities(&t, &l).is_err());
        assert!(Template::<f64>::from_class_weights(&l, &[1.0]).is_err());
    }

    #[test]
    fn all_live_sampling_is_certain() {
        let m = PermutationMap::random(50, &mut ChaCha20Rng::seed_from_u64(3));
        let r = sample_ontic_frequencies(&m, &OutcomeLabeling::uniform(50, LIVE), 7, 1000, 1).unwrap();
        assert_eq!(r.frequencies, vec![1.0]);
        assert_eq!(r.std_errors, vec![0.0]);
    }

    #[test]
    fn exhaustive_identity_reproduces_fractions() {
        let l = OutcomeLabeling::live_prefix(40, 13).unwrap();
        let opts = SamplingOptions { exhaustive: true, ..Default::default() };
        let r = sample_ontic_frequencies_with(&PermutationMap::identity(40), &l, 123, 40, 0, opts).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.counts, vec![13, 27]);
        assert_eq!(r.frequencies, l.class_fractions());
    }

    #[test]
    fn sampling_is_deterministic_and_pool_independent() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let m = PermutationMap::random(1000, &mut rng);
        let l = OutcomeLabeling::live_shuffled(1000, 600, &mut rng).unwrap();
        let opts = SamplingOptions { exhaustive: false, batch_size: 1000 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_ontic_frequencies_with(&m, &l, 50, 20_000, 9, opts).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_ne!(a.counts, sample_ontic_frequencies_with(&m, &l, 50, 20_000, 10, opts).unwrap().counts);
        assert_eq!(a.counts.iter().sum::<u64>(), 20_000);
    }

    #[test]
    fn conservation_examples() {
        let l = OutcomeLabeling::live_prefix(20, 8).unwrap();
        let id = abundance_conservation_check(&PermutationMap::identity(20), &l, 5).unwrap();
        assert!(id.conserved);
        assert_eq!(l.pullback(&PermutationMap::identity(20), 5).unwrap(), l);

        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let m = PermutationMap::random(10_000, &mut rng);
        let l = OutcomeLabeling::live_shuffled(10_000, 6000, &mut rng).unwrap();
        let r = abundance_conservation_check(&m, &l, 37).unwrap();
        assert!(r.conserved);
        assert_eq!(r.pullback_counts, vec![6000, 4000]);
        let far = abundance_conservation_check(&m, &l, 1 << 40).unwrap();
        assert!(far.conserved);
    }

    #[test]
    fn z_score_examples() {
        let labels = vec![LIVE.to_string(), DEAD.to_string()];
        let exact = EnsembleReport::from_counts(&labels, vec![600, 400], 0, 0, false);
        let c = compare_frequencies(&exact, &[0.6, 0.4]).unwrap();
        assert!(c.z_scores.iter().all(|&z| z.abs() < 1e-9));
        assert!(c.passed());

        let m = 10_000_u64;
        let se = (0.24 / m as f64).sqrt();
        let live = ((0.6 + se) * m as f64).round() as u64;
        let shifted = EnsembleReport::from_counts(&labels, vec![live, m - live], 0, 0, false);
        let c = compare_frequencies(&shifted, &[0.6, 0.4]).unwrap();
        assert!((c.z_scores[0] - 1.0).abs() < 0.05);

        let far = EnsembleReport::from_counts(&labels, vec![700, 300], 0, 0, false);
        assert_eq!(compare_frequencies(&far, &[0.6, 0.4]).unwrap().flagged, labels);

        let impossible = EnsembleReport::from_counts(&labels, vec![999, 1], 0, 0, false);
        let c = compare_frequencies(&impossible, &[1.0, 0.0]).unwrap();
        assert_eq!(c.impossible, labels);
        assert!(!c.passed());
        assert!(compare_frequencies(&impossible, &[1.0]).is_err());
    }
}
