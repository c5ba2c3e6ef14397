//! A two-branch system entangled with an `N`-level environment.
//!
//! Branch 0 is the undecayed atom (live cat), branch 1 the decayed atom (dead
//! cat). Each environment level `i` picks up a branch-dependent phase `φ_i`.
//! Ontic states are orthonormal environment superpositions (columns of a
//! unitary), and the equal-weight mixture over them reduces to the block
//! form `(1/N)[[p·𝕀, √(p(1−p))·X], [√(p(1−p))·X*, (1−p)·𝕀]]` with
//! `X = diag(e^{−iφ_i})`. Once the phases are spread around the circle the
//! environment trace of `X` averages away and the reduced system density is
//! diagonal.
//!
//! Vectors and matrices over the joint space use the index `branch·N + i`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{check_dim, domain, Error, Result};
use crate::hilbert::WaveFunction;
use crate::scalar::{cis, creal, czero, max_abs_diff, modulus, pairwise_sum, wrap_phase, Real};
use crate::seeding::SeedStreams;

/// Probabilities of the two branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchWeights<T: Real> {
    p_live: T,
}

impl<T: Real> BranchWeights<T> {
    pub fn new(p_live: T) -> Result<Self> {
        if !(p_live >= T::zero() && p_live <= T::one()) {
            return domain(format!("p_live = {p_live} is not in [0, 1]"));
        }
        Ok(BranchWeights { p_live })
    }

    pub fn p_live(&self) -> T {
        self.p_live
    }

    pub fn p_dead(&self) -> T {
        T::one() - self.p_live
    }

    /// `√(p_live·p_dead)`, the coherence scale.
    pub fn coherence(&self) -> T {
        (self.p_live * self.p_dead()).sqrt()
    }
}

/// Branch-relative phases `φ_i ∈ [0, 2π)` of the `N` environment levels.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentEnsemble<T: Real> {
    phases: Vec<T>,
}

impl<T: Real> EnvironmentEnsemble<T> {
    pub fn new(phases: Vec<T>) -> Result<Self> {
        if phases.is_empty() {
            return domain("environment needs at least one level");
        }
        if let Some(p) = phases.iter().find(|&&p| !(p >= T::zero() && p < T::two_pi())) {
            return domain(format!("phase {p} is not in [0, 2π)"));
        }
        Ok(EnvironmentEnsemble { phases })
    }

    /// Wraps arbitrary finite phases into `[0, 2π)`.
    pub fn wrapped(phases: Vec<T>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return domain("phases must be finite");
        }
        Self::new(phases.into_iter().map(wrap_phase).collect())
    }

    pub fn zeros(size: usize) -> Result<Self> {
        Self::new(vec![T::zero(); size])
    }

    /// `φ_i = 2πi/N`; the phase factors sum to zero for `N ≥ 2`.
    pub fn uniform_grid(size: usize) -> Result<Self> {
        let n = T::of_usize(size);
        Self::new((0..size).map(|i| T::two_pi() * T::of_usize(i) / n).collect())
    }

    /// Independent uniform phases.
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Self> {
        Self::wrapped((0..size).map(|_| T::lit(rng.random::<f64>()) * T::two_pi()).collect())
    }

    pub fn size(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    /// The diagonal of `X`: `e^{−iφ_i}`.
    pub fn phase_factors(&self) -> Vec<Complex<T>> {
        self.phases.iter().map(|&p| cis(-p)).collect()
    }
}

/// Unitary matrix whose column `k` holds the coefficients `α_i^(k)` of
/// ontic state `k` in the environment basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EntangledBasis<T: Real> {
    coefficients: DMatrix<Complex<T>>,
}

impl<T: Real> EntangledBasis<T> {
    /// Accepts a square matrix with orthonormal columns (within `1e-10`).
    pub fn new(coefficients: DMatrix<Complex<T>>) -> Result<Self> {
        if !coefficients.is_square() || coefficients.is_empty() {
            return domain("entangled basis must be a non-empty square matrix");
        }
        let basis = EntangledBasis { coefficients };
        let residual = basis.orthonormality_residual();
        if residual > T::tol(1e-10) {
            return domain(format!("basis columns are not orthonormal (residual {residual})"));
        }
        Ok(basis)
    }

    /// Haar-random unitary from the QR factorization of an i.i.d. complex
    /// Gaussian matrix, with the phases of `R`'s diagonal moved into `Q`.
    pub fn haar<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Self> {
        if size == 0 {
            return domain("entangled basis dimension must be at least 1");
        }
        let mut draw = || -> T { T::lit(StandardNormal.sample(rng)) };
        let gaussian = DMatrix::from_fn(size, size, |_, _| Complex::new(draw(), draw()));
        let (mut q, r) = gaussian.qr().unpack();
        for (j, mut column) in q.column_iter_mut().enumerate() {
            let d = r[(j, j)];
            let m = modulus(d);
            let phase = if m > T::zero() { d / creal(m) } else { creal(T::one()) };
            column *= phase;
        }
        Ok(EntangledBasis { coefficients: q })
    }

    pub fn identity(size: usize) -> Self {
        EntangledBasis { coefficients: DMatrix::identity(size, size) }
    }

    pub fn size(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> &DMatrix<Complex<T>> {
        &self.coefficients
    }

    /// `max |Σ_i α_i^(k)* α_i^(k') − δ_kk'|` (columns orthonormal).
    pub fn orthonormality_residual(&self) -> T {
        let n = self.size();
        max_abs_diff(&(self.coefficients.adjoint() * &self.coefficients), &DMatrix::identity(n, n))
    }

    /// `max |Σ_k α_i^(k) α_j^(k)* − δ_ij|` (completeness over ontic states).
    pub fn completeness_residual(&self) -> T {
        let n = self.size();
        max_abs_diff(&(&self.coefficients * self.coefficients.adjoint()), &DMatrix::identity(n, n))
    }
}

/// Density matrix on the joint `2N`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: DMatrix<Complex<T>>,
}

/// Largest `N` at which [`DensityMatrix::min_eigenvalue`] is evaluated by
/// default when validating.
pub const PSD_CHECK_LIMIT: usize = 64;

impl<T: Real> DensityMatrix<T> {
    pub fn from_matrix(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if !matrix.is_square() {
            return domain("density matrix must be square");
        }
        Ok(DensityMatrix { matrix })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &WaveFunction<T>) -> Self {
        let v = psi.amplitudes();
        DensityMatrix { matrix: v * v.adjoint() }
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    pub fn hermiticity_residual(&self) -> T {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// Eigenvalues in ascending order (Hermitian part).
    pub fn eigenvalues(&self) -> Vec<T> {
        let hermitian = (&self.matrix + self.matrix.adjoint()) * creal(T::lit(0.5));
        let mut ev: Vec<T> = SymmetricEigen::new(hermitian).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        ev
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    /// Hermitian and unit trace within `1e-10`; also positive semidefinite
    /// (smallest eigenvalue ≥ −1e-10) when the dimension is at most
    /// `2·PSD_CHECK_LIMIT`.
    pub fn validate(&self) -> Result<()> {
        let tol = T::tol(1e-10);
        let h = self.hermiticity_residual();
        if h > tol {
            return domain(format!("density matrix is not Hermitian (residual {h})"));
        }
        let tr = self.trace();
        if modulus(tr - creal(T::one())) > tol {
            return domain(format!("density matrix trace is {tr}, not 1"));
        }
        if self.dimension() <= 2 * PSD_CHECK_LIMIT {
            let min = self.min_eigenvalue();
            if min < -tol {
                return domain(format!("density matrix has negative eigenvalue {min}"));
            }
        }
        Ok(())
    }
}

/// Mean phase factor `(1/N) Σ_i e^{−iφ_i}` and its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseAverage<T> {
    pub mean: Complex<T>,
    pub magnitude: T,
}

pub fn sample_entangled_basis<T: Real>(size: usize, seed: u64) -> Result<EntangledBasis<T>> {
    EntangledBasis::haar(size, &mut SeedStreams::new(seed).stream("basis"))
}

/// `√p_live·α^(k) ⊕ √p_dead·e^{iφ}α^(k)` on the joint space.
pub fn pure_branch_state<T: Real>(
    k: usize,
    basis: &EntangledBasis<T>,
    env: &EnvironmentEnsemble<T>,
    w: &BranchWeights<T>,
) -> Result<WaveFunction<T>> {
    let n = basis.size();
    check_dim(n, env.size())?;
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, size: n });
    }
    let live = creal(w.p_live().sqrt());
    let dead = w.p_dead().sqrt();
    let column = basis.coefficients.column(k);
    let amps = DVector::from_fn(2 * n, |idx, _| {
        if idx < n {
            column[idx] * live
        } else {
            let i = idx - n;
            column[i] * cis(env.phases[i]) * dead
        }
    });
    let psi = WaveFunction::new(amps)?;
    Ok(psi)
}

pub fn pure_state_density<T: Real>(
    k: usize,
    basis: &EntangledBasis<T>,
    env: &EnvironmentEnsemble<T>,
    w: &BranchWeights<T>,
) -> Result<DensityMatrix<T>> {
    Ok(DensityMatrix::pure(&pure_branch_state(k, basis, env, w)?))
}

/// Equal-weight average of [`pure_state_density`] over every ontic state.
pub fn ensemble_density<T: Real>(
    basis: &EntangledBasis<T>,
    env: &EnvironmentEnsemble<T>,
    w: &BranchWeights<T>,
) -> Result<DensityMatrix<T>> {
    let n = basis.size();
    check_dim(n, env.size())?;
    let mut sum = DMatrix::from_element(2 * n, 2 * n, czero());
    for k in 0..n {
        sum += pure_state_density(k, basis, env, w)?.matrix;
    }
    sum *= creal(T::one() / T::of_usize(n));
    Ok(DensityMatrix { matrix: sum })
}

/// The block form `(1/N)[[p·𝕀, c·X], [c·X*, (1−p)·𝕀]]`, `c = √(p(1−p))`,
/// built directly from the phases without any basis.
pub fn ensemble_density_closed_form<T: Real>(env: &EnvironmentEnsemble<T>, w: &BranchWeights<T>) -> DensityMatrix<T> {
    let n = env.size();
    let inv_n = T::one() / T::of_usize(n);
    let c = w.coherence();
    let mut m = DMatrix::from_element(2 * n, 2 * n, czero());
    for (i, x) in env.phase_factors().into_iter().enumerate() {
        m[(i, i)] = creal(w.p_live() * inv_n);
        m[(n + i, n + i)] = creal(w.p_dead() * inv_n);
        m[(i, n + i)] = x * (c * inv_n);
        m[(n + i, i)] = x.conj() * (c * inv_n);
    }
    DensityMatrix { matrix: m }
}

pub fn phase_average_suppression<T: Real>(env: &EnvironmentEnsemble<T>) -> PhaseAverage<T> {
    let mean = pairwise_sum(&env.phase_factors()) / creal(T::of_usize(env.size()));
    PhaseAverage { mean, magnitude: modulus(mean) }
}

/// Partial trace over the environment: `ρ_ab = Σ_i ρ_(a,i),(b,i)`.
pub fn reduced_system_density<T: Real>(rho: &DensityMatrix<T>) -> Result<Matrix2<Complex<T>>> {
    let dim = rho.dimension();
    if dim == 0 || dim % 2 != 0 {
        return domain(format!("joint dimension {dim} is not a positive even number"));
    }
    let n = dim / 2;
    let mut out = Matrix2::from_element(czero());
    for a in 0..2 {
        for b in 0..2 {
            let diag: Vec<Complex<T>> = (0..n).map(|i| rho.matrix[(a * n + i, b * n + i)]).collect();
            out[(a, b)] = pairwise_sum(&diag);
        }
    }
    Ok(out)
}

/// Reduced density of the ensemble straight from the phases, in O(N) time and
/// O(1) extra memory: `[[p, c·m], [c·m*, 1−p]]` with `m` the mean phase factor.
pub fn reduced_ensemble_density<T: Real>(env: &EnvironmentEnsemble<T>, w: &BranchWeights<T>) -> Matrix2<Complex<T>> {
    let m = phase_average_suppression(env).mean;
    let c = w.coherence();
    Matrix2::new(creal(w.p_live()), m * c, m.conj() * c, creal(w.p_dead()))
}

/// Median off-diagonal magnitude of the reduced density for one environment
/// size across a run of seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuppressionSample {
    pub size: usize,
    pub seed: u64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuppressionSweep {
    pub samples: Vec<SuppressionSample>,
    /// `(N, median off-diagonal magnitude)` per size, in input order.
    pub medians: Vec<(usize, f64)>,
    /// Least-squares slope of `ln median` against `ln N`.
    pub slope: f64,
}

/// For each size and each seed `0..seeds`, draws i.i.d. uniform phases from
/// the `phases` sub-stream of `root_seed` and records `|ρ_01|` of the reduced
/// ensemble density. Runs on the current rayon pool; output does not depend
/// on the number of workers.
pub fn suppression_sweep(sizes: &[usize], seeds: u64, root_seed: u64, w: &BranchWeights<f64>) -> Result<SuppressionSweep> {
    use rayon::prelude::*;
    if sizes.is_empty() || seeds == 0 {
        return domain("sweep needs at least one size and one seed");
    }
    if sizes.contains(&0) {
        return domain("environment sizes must be positive");
    }
    let streams = SeedStreams::new(root_seed);
    let jobs: Vec<(usize, usize, u64)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(si, &n)| (0..seeds).map(move |s| (si, n, s)))
        .collect();
    let samples: Vec<SuppressionSample> = jobs
        .par_iter()
        .map(|&(si, n, seed)| {
            let mut rng = streams.substream("phases", (si as u64) << 32 | seed);
            let env = EnvironmentEnsemble::<f64>::random(n, &mut rng)?;
            let rho = reduced_ensemble_density(&env, w);
            Ok(SuppressionSample { size: n, seed, magnitude: rho[(0, 1)].norm() })
        })
        .collect::<Result<_>>()?;
    let medians: Vec<(usize, f64)> = sizes
        .iter()
        .map(|&n| {
            let mut m: Vec<f64> = samples.iter().filter(|s| s.size == n).map(|s| s.magnitude).collect();
            (n, median(&mut m))
        })
        .collect();
    let slope = log_log_slope(&medians);
    Ok(SuppressionSweep { samples, medians, slope })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
