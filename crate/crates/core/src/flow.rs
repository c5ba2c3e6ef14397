//! Continuous deterministic flow `dq/dt = f(q)` on a one-dimensional periodic
//! domain, quantized with the symmetrized generator `H = ½(p·f + f·p)`.
//!
//! `p = −i·D` where `D` is a real antisymmetric derivative matrix (Fourier
//! spectral by default, central difference optionally), which makes `H`
//! exactly Hermitian entry by entry. The Schrödinger equation with this `H` is
//! the continuity equation for `|ψ|²` transported by `f`, so narrow packets
//! follow the classical trajectory.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{check_dim, domain, Result};
use crate::hilbert::WaveFunction;
use crate::scalar::{cis, czero, modulus, wrap_phase, Real};

/// `M` equally spaced points on `[0, L)` with periodic boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid<T: Real> {
    points: usize,
    length: T,
}

impl<T: Real> PeriodicGrid<T> {
    pub const MIN_POINTS: usize = 8;

    pub fn new(points: usize, length: T) -> Result<Self> {
        if points < Self::MIN_POINTS {
            return domain(format!("grid needs at least {} points, got {points}", Self::MIN_POINTS));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return domain(format!("domain length must be positive and finite, got {length}"));
        }
        Ok(PeriodicGrid { points, length })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn spacing(&self) -> T {
        self.length / T::of_usize(self.points)
    }

    pub fn position(&self, j: usize) -> T {
        T::of_usize(j) * self.spacing()
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.points).map(|j| self.position(j)).collect()
    }

    pub fn wrap(&self, x: T) -> T {
        let mut w = x % self.length;
        if w < T::zero() {
            w += self.length;
        }
        if w >= self.length {
            w = T::zero();
        }
        w
    }

    /// Signed separation `a − b` reduced to `[−L/2, L/2)`.
    pub fn separation(&self, a: T, b: T) -> T {
        let half = self.length / T::lit(2.0);
        self.wrap(a - b + half) - half
    }

    /// Circular mean of a distribution over grid points.
    pub fn circular_mean(&self, weights: &[T]) -> T {
        let k = T::two_pi() / self.length;
        let mut acc: Complex<T> = czero();
        for (j, &w) in weights.iter().enumerate() {
            acc += cis(k * self.position(j)) * w;
        }
        wrap_phase(acc.im.atan2(acc.re)) / k
    }
}

/// Velocity field sampled on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<T: Real> {
    values: Vec<T>,
}

impl<T: Real> FlowField<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return domain(format!("flow value {v} at grid point {j} is not finite"));
        }
        Ok(FlowField { values })
    }

    pub fn from_fn(grid: &PeriodicGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(grid.positions().into_iter().map(f).collect())
    }

    pub fn constant(grid: &PeriodicGrid<T>, c: T) -> Result<Self> {
        Self::from_fn(grid, |_| c)
    }

    /// Linear interpolation of scattered samples `(x, f)` onto the grid,
    /// treating the samples as periodic with the grid's length.
    pub fn from_samples(grid: &PeriodicGrid<T>, samples: &[(T, T)]) -> Result<Self> {
        if samples.is_empty() {
            return domain("flow field needs at least one sample");
        }
        let mut pts: Vec<(T, T)> = samples.iter().map(|&(x, f)| (grid.wrap(x), f)).collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite sample positions"));
        let l = grid.length();
        let values = grid
            .positions()
            .into_iter()
            .map(|x| {
                let upper = pts.partition_point(|p| p.0 <= x);
                let (x0, f0) = if upper == 0 { (pts[pts.len() - 1].0 - l, pts[pts.len() - 1].1) } else { pts[upper - 1] };
                let (x1, f1) = if upper == pts.len() { (pts[0].0 + l, pts[0].1) } else { pts[upper] };
                if x1 - x0 <= T::zero() {
                    f0
                } else {
                    f0 + (f1 - f0) * (x - x0) / (x1 - x0)
                }
            })
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples the trigonometric interpolant of the grid values on a grid
    /// `factor` times finer (zero-padding in Fourier space). Grid points of
    /// the original grid keep their values.
    pub fn spectral_upsample(&self, grid: &PeriodicGrid<T>, factor: usize) -> Result<(PeriodicGrid<T>, FlowField<T>)> {
        check_dim(grid.points(), self.len())?;
        if factor == 0 {
            return domain("upsampling factor must be positive");
        }
        let m = grid.points();
        let fine_m = m * factor;
        let fine = PeriodicGrid::new(fine_m, grid.length())?;
        let mut planner = FftPlanner::new();
        let mut spectrum: Vec<Complex<T>> = self.values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        planner.plan_fft_forward(m).process(&mut spectrum);
        let mut padded = vec![czero(); fine_m];
        let positive = m.div_ceil(2);
        padded[..positive].copy_from_slice(&spectrum[..positive]);
        for k in 1..=(m - positive) {
            padded[fine_m - k] = spectrum[m - k];
        }
        if m % 2 == 0 && factor > 1 {
            // split the Nyquist coefficient between ±M/2 so the interpolant is real
            let half = spectrum[m / 2] * T::lit(0.5);
            padded[m / 2] = half;
            padded[fine_m - m / 2] = half;
        }
        planner.plan_fft_inverse(fine_m).process(&mut padded);
        let scale = T::one() / T::of_usize(m);
        Ok((fine, FlowField::new(padded.into_iter().map(|z| z.re * scale).collect())?))
    }

    /// Periodic linear interpolation between grid values.
    pub fn interpolate(&self, grid: &PeriodicGrid<T>, x: T) -> T {
        let s = grid.wrap(x) / grid.spacing();
        let j = s.floor();
        let frac = s - j;
        let j = j.to_usize().unwrap_or(0).min(self.values.len() - 1);
        let a = self.values[j];
        let b = self.values[(j + 1) % self.values.len()];
        a + (b - a) * frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeScheme {
    #[default]
    Spectral,
    CentralDifference,
}

/// Real antisymmetric first-derivative matrix on the periodic grid.
///
/// The spectral matrix is the derivative of the trigonometric interpolant with
/// the Nyquist mode (even `M`) mapped to zero, which is what keeps it real.
pub fn derivative_matrix<T: Real>(grid: &PeriodicGrid<T>, scheme: DerivativeScheme) -> DMatrix<T> {
    let m = grid.points();
    let mut d = DMatrix::zeros(m, m);
    let coefficient = |n: usize| -> T {
        match scheme {
            DerivativeScheme::Spectral => {
                let sign = if n % 2 == 0 { T::one() } else { -T::one() };
                let arg = T::pi() * T::of_usize(n) / T::of_usize(m);
                let scale = T::pi() / grid.length();
                if m % 2 == 0 {
                    sign * scale / arg.tan()
                } else {
                    sign * scale / arg.sin()
                }
            }
            DerivativeScheme::CentralDifference => {
                let half = T::one() / (T::lit(2.0) * grid.spacing());
                if n == 1 {
                    -half
                } else if n == m - 1 {
                    half
                } else {
                    T::zero()
                }
            }
        }
    };
    for i in 0..m {
        for j in i + 1..m {
            // entry (i, j) depends on (i - j) mod m
            let c = coefficient((i + m - j) % m);
            d[(i, j)] = c;
            d[(j, i)] = -c;
        }
    }
    d
}

/// Dense matrix of `H = ½(p·f + f·p)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedHamiltonian<T: Real> {
    matrix: DMatrix<Complex<T>>,
}

/// Eigen-decomposition of a [`DiscretizedHamiltonian`], reusable for many
/// evolution times.
#[derive(Debug, Clone)]
pub struct FlowSpectrum<T: Real> {
    energies: DVector<T>,
    vectors: DMatrix<Complex<T>>,
}

impl<T: Real> DiscretizedHamiltonian<T> {
    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖H − H†‖∞` (maximum absolute row sum).
    pub fn hermiticity_residual(&self) -> T {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.row_iter()
            .map(|row| row.iter().fold(T::zero(), |acc, &z| acc + modulus(z)))
            .fold(T::zero(), |m, r| if r > m { r } else { m })
    }

    pub fn spectrum(&self) -> FlowSpectrum<T> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        FlowSpectrum { energies: eig.eigenvalues, vectors: eig.eigenvectors }
    }
}

impl<T: Real> FlowSpectrum<T> {
    pub fn energies(&self) -> &DVector<T> {
        &self.energies
    }

    /// Expansion coefficients `V†ψ`.
    pub fn coefficients(&self, psi: &WaveFunction<T>) -> Result<DVector<Complex<T>>> {
        check_dim(self.vectors.nrows(), psi.len())?;
        Ok(self.vectors.ad_mul(psi.amplitudes()))
    }

    /// `V exp(−iEt) c` for coefficients from [`coefficients`](Self::coefficients).
    pub fn evolve_coefficients(&self, coeffs: &DVector<Complex<T>>, t: T) -> WaveFunction<T> {
        let phased = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(self.energies.iter()).map(|(&c, &e)| c * cis(-e * t)),
        );
        WaveFunction::from_unit(&self.vectors * phased)
    }

    pub fn evolve(&self, psi: &WaveFunction<T>, t: T) -> Result<WaveFunction<T>> {
        Ok(self.evolve_coefficients(&self.coefficients(psi)?, t))
    }
}

/// `H = ½(P·diag(f) + diag(f)·P)` with `P = −i·D` and the default spectral `D`.
pub fn build_flow_hamiltonian<T: Real>(f: &FlowField<T>, grid: &PeriodicGrid<T>) -> Result<DiscretizedHamiltonian<T>> {
    build_flow_hamiltonian_with(f, grid, DerivativeScheme::Spectral)
}

pub fn build_flow_hamiltonian_with<T: Real>(
    f: &FlowField<T>,
    grid: &PeriodicGrid<T>,
    scheme: DerivativeScheme,
) -> Result<DiscretizedHamiltonian<T>> {
    check_dim(grid.points(), f.len())?;
    if f.values.iter().any(|v| !v.is_finite()) {
        return domain("flow field has non-finite values");
    }
    let d = derivative_matrix(grid, scheme);
    let half = T::lit(0.5);
    let fv = &f.values;
    // (−i/2)(D_jl f_l + f_j D_jl): purely imaginary, and exactly Hermitian
    // because D is exactly antisymmetric.
    let matrix = DMatrix::from_fn(grid.points(), grid.points(), |j, l| {
        Complex::new(T::zero(), -half * d[(j, l)] * (fv[l] + fv[j]))
    });
    Ok(DiscretizedHamiltonian { matrix })
}

/// Normal distribution of width `width` centred on `center`, standing in for
/// a position eigenstate on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket<T: Real> {
    center: T,
    width: T,
}

impl<T: Real> GaussianPacket<T> {
    /// Requires `width ≥ 2Δ` so the packet is resolved and `6·width ≤ L` so
    /// its periodic images do not overlap.
    pub fn new(center: T, width: T, grid: &PeriodicGrid<T>) -> Result<Self> {
        if !center.is_finite() {
            return domain("packet center must be finite");
        }
        if !(width >= T::lit(2.0) * grid.spacing()) {
            return domain(format!("packet width {width} is below two grid spacings ({})", grid.spacing()));
        }
        if T::lit(6.0) * width > grid.length() {
            return domain(format!("packet width {width} exceeds a sixth of the domain"));
        }
        Ok(GaussianPacket { center: grid.wrap(center), width })
    }

    pub fn center(&self) -> T {
        self.center
    }

    pub fn width(&self) -> T {
        self.width
    }

    /// Normalized amplitudes `∝ exp(−d²/4σ²)`, so `|ψ|²` has standard
    /// deviation `σ`; `d` is the periodic distance to the center.
    pub fn wave_function(&self, grid: &PeriodicGrid<T>) -> WaveFunction<T> {
        let four_var = T::lit(4.0) * self.width * self.width;
        let amps = DVector::from_iterator(
            grid.points(),
            grid.positions().into_iter().map(|x| {
                let d = grid.separation(x, self.center);
                Complex::new((-(d * d) / four_var).exp(), T::zero())
            }),
        );
        WaveFunction::normalized(amps).expect("gaussian has positive norm")
    }
}

/// Fourth-order Runge–Kutta for `dq/dt = f(q)` with `f` linearly interpolated
/// between grid values; positions wrap into `[0, L)`.
///
/// Uses `⌈T/dt⌉` equal steps and returns every `(t, q)` including both ends.
pub fn classical_flow_integrate<T: Real>(
    q0: T,
    f: &FlowField<T>,
    grid: &PeriodicGrid<T>,
    horizon: T,
    dt: T,
) -> Result<Vec<(T, T)>> {
    if !(dt > T::zero()) {
        return domain(format!("time step must be positive, got {dt}"));
    }
    if !(horizon >= T::zero()) {
        return domain(format!("horizon must be non-negative, got {horizon}"));
    }
    check_dim(grid.points(), f.len())?;
    let ratio = horizon / dt;
    // tolerate T/dt landing a hair above an integer
    let steps = (ratio - ratio * T::lit(1e-12)).ceil().to_usize().unwrap_or(0).max(1);
    let h = horizon / T::of_usize(steps);
    let half = T::lit(0.5);
    let vel = |q: T| f.interpolate(grid, q);
    let mut q = grid.wrap(q0);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((T::zero(), q));
    for n in 1..=steps {
        let k1 = vel(q);
        let k2 = vel(q + half * h * k1);
        let k3 = vel(q + half * h * k2);
        let k4 = vel(q + h * k3);
        q = grid.wrap(q + h / T::lit(6.0) * (k1 + T::lit(2.0) * (k2 + k3) + k4));
        out.push((T::of_usize(n) * h, q));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint<T> {
    pub t: T,
    pub expectation: T,
    pub classical: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EhrenfestReport<T> {
    /// Largest periodic distance between `⟨q⟩(t)` and the classical path.
    pub max_deviation: T,
    pub trajectory: Vec<TrajectoryPoint<T>>,
}

/// Classical RK4 sub-steps per reported time step.
const CLASSICAL_SUBSTEPS: usize = 16;

/// Minimum number of points the classical reference integrates on with the
/// spectral scheme.
const CLASSICAL_FINE_POINTS: usize = 1 << 16;

/// Evolves `packet` under `exp(−iHt)` and compares the circular mean of
/// `|ψ|²` with the classical trajectory from the packet's center at
/// `steps + 1` equally spaced times in `[0, horizon]`.
///
/// With the spectral scheme the quantum dynamics sees the trigonometric
/// interpolant of the grid values, so the classical reference integrates the
/// same interpolant, sampled on a grid of at least 2^16 points. With central
/// differences it integrates the grid values directly.
pub fn ehrenfest_check<T: Real>(
    packet: &GaussianPacket<T>,
    f: &FlowField<T>,
    grid: &PeriodicGrid<T>,
    horizon: T,
    steps: usize,
) -> Result<EhrenfestReport<T>> {
    ehrenfest_check_with(packet, f, grid, horizon, steps, DerivativeScheme::Spectral)
}

pub fn ehrenfest_check_with<T: Real>(
    packet: &GaussianPacket<T>,
    f: &FlowField<T>,
    grid: &PeriodicGrid<T>,
    horizon: T,
    steps: usize,
    scheme: DerivativeScheme,
) -> Result<EhrenfestReport<T>> {
    if steps == 0 {
        return domain("ehrenfest check needs at least one step");
    }
    let h = build_flow_hamiltonian_with(f, grid, scheme)?;
    let spectrum = h.spectrum();
    let coeffs = spectrum.coefficients(&packet.wave_function(grid))?;

    let substeps = steps * CLASSICAL_SUBSTEPS;
    let (fine_grid, fine_f);
    let (cl_grid, cl_f) = match scheme {
        DerivativeScheme::Spectral => {
            (fine_grid, fine_f) = f.spectral_upsample(grid, CLASSICAL_FINE_POINTS.div_ceil(grid.points()))?;
            (&fine_grid, &fine_f)
        }
        DerivativeScheme::CentralDifference => (grid, f),
    };
    let classical = if horizon > T::zero() {
        classical_flow_integrate(packet.center(), cl_f, cl_grid, horizon, horizon / T::of_usize(substeps))?
    } else {
        vec![(T::zero(), packet.center()); substeps + 1]
    };

    let mut max_deviation = T::zero();
    let mut trajectory = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = horizon * T::of_usize(k) / T::of_usize(steps);
        let psi = spectrum.evolve_coefficients(&coeffs, t);
        let expectation = grid.circular_mean(&psi.probabilities());
        let q_cl = classical[k * CLASSICAL_SUBSTEPS].1;
        let dev = grid.separation(expectation, q_cl).abs();
        if dev > max_deviation {
            max_deviation = dev;
        }
        trajectory.push(TrajectoryPoint { t, expectation, classical: q_cl });
    }
    Ok(EhrenfestReport { max_deviation, trajectory })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormFunctionalReport<T: Real> {
    /// Largest `|‖ψ(t)‖ − 1|` over the sampled times.
    pub norm_drift: T,
    /// Largest gap between the sorted magnitudes `|ψ_j|` at `T` and at 0.
    pub amplitude_multiset_deviation: T,
    pub evolved: WaveFunction<T>,
}

impl<T: Real> NormFunctionalReport<T> {
    /// True when evolution merely transported the magnitudes.
    pub fn transports_amplitudes(&self, tol: T) -> bool {
        self.amplitude_multiset_deviation <= tol
    }
}

/// Times at which the norm is sampled in [`norm_functional_check`].
const NORM_SAMPLES: usize = 8;

/// Evolves `psi` to `horizon`, tracking the 2-norm at intermediate times and
/// comparing the multiset of magnitudes at the end with the initial one.
///
/// For a divergence-free flow the magnitudes are only moved around, so any
/// positive function of `ψ` is conserved; for a general flow only the
/// 2-norm is.
pub fn norm_functional_check<T: Real>(
    psi: &WaveFunction<T>,
    h: &DiscretizedHamiltonian<T>,
    horizon: T,
) -> Result<NormFunctionalReport<T>> {
    check_dim(h.dimension(), psi.len())?;
    let spectrum = h.spectrum();
    let coeffs = spectrum.coefficients(psi)?;
    let mut norm_drift = T::zero();
    let mut evolved = psi.clone();
    for k in 1..=NORM_SAMPLES {
        let t = horizon * T::of_usize(k) / T::of_usize(NORM_SAMPLES);
        evolved = spectrum.evolve_coefficients(&coeffs, t);
        let drift = (evolved.norm() - T::one()).abs();
        if drift > norm_drift {
            norm_drift = drift;
        }
    }
    let sorted_magnitudes = |w: &WaveFunction<T>| {
        let mut m: Vec<T> = w.amplitudes().iter().map(|&z| modulus(z)).collect();
        m.sort_by(|a, b| a.partial_cmp(b).expect("finite amplitudes"));
        m
    };
    let amplitude_multiset_deviation = sorted_magnitudes(psi)
        .into_iter()
        .zip(sorted_magnitudes(&evolved))
        .map(|(a, b)| (a - b).abs())
        .fold(T::zero(), |m, d| if d > m { d } else { m });
    Ok(NormFunctionalReport { norm_drift, amplitude_multiset_deviation, evolved })
}
