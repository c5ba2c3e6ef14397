//! Permutation dynamics written in the language of quantum mechanics.
//!
//! A reversible step is a unitary matrix of zeros and ones. Its Hamiltonian is
//! built in closed form cycle by cycle: a cycle of length `L` contributes the
//! eigenphases `2πk/L` with discrete-Fourier eigenvectors supported on the
//! cycle, so `exp(-iH)` reproduces the step exactly and every eigenphase lies
//! in `[0, 2π)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{check_dim, domain, Error, Result};
use crate::ontic::{OnticState, PermutationMap};
use crate::scalar::{cis, cone, creal, czero, modulus, Real};

/// Default cap on `N` for the dense eigenvector matrix (O(N²) memory).
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Unit-norm complex amplitudes over a finite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T: Real> {
    amplitudes: DVector<Complex<T>>,
}

impl<T: Real> WaveFunction<T> {
    /// Accepts `amplitudes` if their norm is 1 within `1e-12` (scaled to `T`).
    pub fn new(amplitudes: DVector<Complex<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return domain("wave function needs at least one amplitude");
        }
        let norm = norm(&amplitudes);
        if (norm - T::one()).abs() > T::tol(1e-12) {
            return domain(format!("wave function norm {norm} is not 1"));
        }
        Ok(WaveFunction { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: DVector<Complex<T>>) -> Result<Self> {
        let norm = norm(&amplitudes);
        if !(norm > T::zero()) || !norm.is_finite() {
            return domain("cannot normalize a zero or non-finite vector");
        }
        let inv = creal(T::one() / norm);
        Ok(WaveFunction { amplitudes: amplitudes * inv })
    }

    pub fn from_vec(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        Self::new(DVector::from_vec(amplitudes))
    }

    /// Skips the norm check; the caller guarantees unit norm.
    pub(crate) fn from_unit(amplitudes: DVector<Complex<T>>) -> Self {
        WaveFunction { amplitudes }
    }

    pub fn delta(k: OnticState, size: usize) -> Result<Self> {
        if k.index() >= size {
            return Err(Error::IndexOutOfRange { index: k.index(), size });
        }
        let mut amplitudes = DVector::from_element(size, czero());
        amplitudes[k.index()] = cone();
        Ok(WaveFunction { amplitudes })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex<T>> {
        self.amplitudes
    }

    pub fn norm(&self) -> T {
        norm(&self.amplitudes)
    }

    /// `|ψ_j|²` per basis state.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        check_dim(self.len(), other.len())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Largest `|ψ_j − φ_j|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(&a, &b)| modulus(a - b))
            .fold(T::zero(), |m, d| if d > m { d } else { m })
    }
}

pub(crate) fn norm<T: Real>(v: &DVector<Complex<T>>) -> T {
    v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt()
}

/// Sparse form of the permutation unitary: column `q'` has its single unit
/// entry in row `targets[q']`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationUnitary {
    targets: Vec<usize>,
}

impl PermutationUnitary {
    pub fn dimension(&self) -> usize {
        self.targets.len()
    }

    /// Row index of the unit entry in column `col`.
    pub fn row_of(&self, col: usize) -> usize {
        self.targets[col]
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        u8::from(self.targets[col] == row)
    }

    pub fn to_dense<T: Real>(&self) -> DMatrix<Complex<T>> {
        let n = self.dimension();
        let mut u = DMatrix::from_element(n, n, czero());
        for (col, &row) in self.targets.iter().enumerate() {
            u[(row, col)] = cone();
        }
        u
    }

    /// `U^t` for integer `t ≥ 0`, via the cycle structure in O(N).
    pub fn power(&self, t: u64) -> Self {
        let m = PermutationMap::new(self.targets.clone()).expect("targets form a bijection");
        PermutationUnitary { targets: m.power(t).into() }
    }

    /// `U ψ` in O(N); amplitudes are moved, never combined, so the norm is
    /// preserved exactly.
    pub fn apply<T: Real>(&self, psi: &WaveFunction<T>) -> Result<WaveFunction<T>> {
        check_dim(self.dimension(), psi.len())?;
        let mut out = DVector::from_element(self.dimension(), czero());
        for (col, &row) in self.targets.iter().enumerate() {
            out[row] = psi.amplitudes[col];
        }
        Ok(WaveFunction::from_unit(out))
    }
}

/// Spectral form of the Hamiltonian `H` with `exp(-iH) = U`.
///
/// Eigenvectors are the columns of a dense unitary matrix; eigenphase `j`
/// belongs to column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpectrum<T: Real> {
    eigenphases: Vec<T>,
    eigenvectors: DMatrix<Complex<T>>,
}

impl<T: Real> HamiltonianSpectrum<T> {
    /// Closed-form spectrum of the permutation `m`, refusing `N > limit`.
    pub fn from_permutation_with_limit(m: &PermutationMap, limit: usize) -> Result<Self> {
        let n = m.size();
        if n > limit {
            return Err(Error::Capacity { dim: n, limit });
        }
        let mut eigenphases = Vec::with_capacity(n);
        let mut eigenvectors = DMatrix::from_element(n, n, czero());
        let mut col = 0;
        for cycle in m.cycle_decomposition().cycles() {
            let len = cycle.len();
            let scale = T::one() / T::of_usize(len).sqrt();
            for k in 0..len {
                // U|c_j⟩ = |c_{j+1}⟩, so Σ_j e^{2πijk/L}|c_j⟩ has eigenvalue
                // e^{-2πik/L}. Reduce jk mod L before scaling to keep the
                // argument in [0, 2π).
                eigenphases.push(T::two_pi() * T::of_usize(k) / T::of_usize(len));
                for (j, &state) in cycle.iter().enumerate() {
                    let phase = T::two_pi() * T::of_usize(j * k % len) / T::of_usize(len);
                    eigenvectors[(state, col)] = cis(phase) * scale;
                }
                col += 1;
            }
        }
        Ok(HamiltonianSpectrum { eigenphases, eigenvectors })
    }

    pub fn from_permutation(m: &PermutationMap) -> Result<Self> {
        Self::from_permutation_with_limit(m, DEFAULT_DENSE_LIMIT)
    }

    pub fn dimension(&self) -> usize {
        self.eigenphases.len()
    }

    pub fn eigenphases(&self) -> &[T] {
        &self.eigenphases
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex<T>> {
        &self.eigenvectors
    }

    /// `V f(θ) V†` for a scalar function of the eigenphase.
    fn spectral_matrix(&self, f: impl Fn(T) -> Complex<T>) -> DMatrix<Complex<T>> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, mut column) in scaled.column_iter_mut().enumerate() {
            column *= f(self.eigenphases[j]);
        }
        scaled * v.adjoint()
    }

    /// Dense `H = V diag(θ) V†`.
    pub fn hamiltonian(&self) -> DMatrix<Complex<T>> {
        self.spectral_matrix(creal)
    }

    /// Dense `exp(-iHt)`.
    pub fn propagator(&self, t: T) -> DMatrix<Complex<T>> {
        self.spectral_matrix(|theta| cis(-theta * t))
    }

    /// `largest |⟨v_j|v_k⟩ − δ_jk|`.
    pub fn orthonormality_residual(&self) -> T {
        let n = self.dimension();
        let gram = self.eigenvectors.adjoint() * &self.eigenvectors;
        let eye = DMatrix::<Complex<T>>::identity(n, n);
        crate::scalar::max_abs_diff(&gram, &eye)
    }

    /// Evolves an arbitrary vector (not necessarily normalized); linear in `v`.
    pub fn evolve_vector(&self, v: &DVector<Complex<T>>, t: T) -> Result<DVector<Complex<T>>> {
        check_dim(self.dimension(), v.len())?;
        if t == T::zero() {
            return Ok(v.clone());
        }
        let mut coeffs = self.eigenvectors.ad_mul(v);
        for (c, &theta) in coeffs.iter_mut().zip(&self.eigenphases) {
            *c *= cis(-theta * t);
        }
        Ok(&self.eigenvectors * coeffs)
    }

    /// `⟨ψ|H|ψ⟩`, real because `H` is Hermitian.
    pub fn energy(&self, psi: &WaveFunction<T>) -> Result<T> {
        check_dim(self.dimension(), psi.len())?;
        let coeffs = self.eigenvectors.ad_mul(psi.amplitudes());
        Ok(coeffs
            .iter()
            .zip(&self.eigenphases)
            .fold(T::zero(), |acc, (c, &theta)| acc + c.norm_sqr() * theta))
    }
}

pub fn unitary_from_permutation(m: &PermutationMap) -> PermutationUnitary {
    PermutationUnitary { targets: m.targets().to_vec() }
}

pub fn hamiltonian_from_permutation<T: Real>(m: &PermutationMap) -> Result<HamiltonianSpectrum<T>> {
    HamiltonianSpectrum::from_permutation(m)
}

pub fn delta_state<T: Real>(k: OnticState, size: usize) -> Result<WaveFunction<T>> {
    WaveFunction::delta(k, size)
}

/// `ψ(t) = V exp(-iθt) V† ψ(0)`; `t` may be any real number.
pub fn schrodinger_evolve<T: Real>(
    psi: &WaveFunction<T>,
    h: &HamiltonianSpectrum<T>,
    t: T,
) -> Result<WaveFunction<T>> {
    Ok(WaveFunction::from_unit(h.evolve_vector(psi.amplitudes(), t)?))
}

pub fn apply_unitary<T: Real>(psi: &WaveFunction<T>, u: &PermutationUnitary) -> Result<WaveFunction<T>> {
    u.apply(psi)
}
