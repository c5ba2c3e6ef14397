//! Deterministic reversible dynamics described in quantum-mechanical language.
//!
//! * [`ontic`]: finite state spaces, permutation maps, cycles, outcome labels.
//! * [`hilbert`]: permutation unitaries, their canonical Hamiltonians, and
//!   Schrödinger evolution of wave functions over ontic states.
//! * [`flow`]: the continuous analogue, `H = ½(p·f + f·p)` on a periodic grid,
//!   checked against the classical flow.
//! * [`decoherence`]: a two-branch system entangled with an environment;
//!   ensemble density matrices and phase-averaged coherence.
//! * [`born`]: outcome frequencies from sampling initial ontic states versus
//!   amplitude-squared predictions.
//!
//! Numerical types are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix double precision, which all documented tolerances assume.

pub mod born;
pub mod decoherence;
pub mod error;
pub mod flow;
pub mod hilbert;
pub mod ontic;
pub mod scalar;
pub mod seeding;

pub use error::{Error, Result};
pub use ontic::{CycleDecomposition, OnticState, OutcomeLabeling, PermutationMap};
pub use scalar::Real;
pub use seeding::SeedStreams;

pub use nalgebra;
pub use num_complex::Complex;

pub type WaveFunction = hilbert::WaveFunction<f64>;
pub type HamiltonianSpectrum = hilbert::HamiltonianSpectrum<f64>;
pub type PeriodicGrid = flow::PeriodicGrid<f64>;
pub type FlowField = flow::FlowField<f64>;
pub type GaussianPacket = flow::GaussianPacket<f64>;
pub type DiscretizedHamiltonian = flow::DiscretizedHamiltonian<f64>;
pub type BranchWeights = decoherence::BranchWeights<f64>;
pub type EnvironmentEnsemble = decoherence::EnvironmentEnsemble<f64>;
pub type EntangledBasis = decoherence::EntangledBasis<f64>;
pub type DensityMatrix = decoherence::DensityMatrix<f64>;
pub type Template = born::Template<f64>;

pub type WaveFunctionF32 = hilbert::WaveFunction<f32>;
pub type HamiltonianSpectrumF32 = hilbert::HamiltonianSpectrum<f32>;
pub type DensityMatrixF32 = decoherence::DensityMatrix<f32>;
