//! Scenario dispatch. Every artifact is computed in memory first and only
//! then written, so a failed run leaves the output directory as it was.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ontic_core::born::{self, EnsembleReport, SamplingOptions};
use ontic_core::decoherence::{self, PSD_CHECK_LIMIT};
use ontic_core::flow::{self, DerivativeScheme};
use ontic_core::hilbert::{self, HamiltonianSpectrum};
use ontic_core::nalgebra::DMatrix;
use ontic_core::{
    BranchWeights, Complex, EnvironmentEnsemble, FlowField, GaussianPacket, OnticState, OutcomeLabeling, PeriodicGrid,
    PermutationMap, SeedStreams,
};
use serde::Serialize;

use crate::config::{
    BornConfig, CatConfig, FlowConfig, Horizon, OutputFormat, PermutationSource, PhaseModel, Scenario, ScenarioConfig,
    SpectrumConfig, SweepConfig, MAX_DENSITY_EXPORT, MAX_EXHAUSTIVE,
};
use crate::error::RunError;
use crate::output::{self, Artifact, Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerance shared by the exact-identity self-checks.
const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, passed: value <= limit }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, passed: value >= limit }
    }

    fn holds(name: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Check { name: name.into(), value: v, limit: 1.0, passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ScenarioConfig,
    pub files: Vec<FileEntry>,
    pub checks: Vec<Check>,
    pub checks_passed: bool,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    /// True when the run asked for a self-check and one of the checks failed.
    pub fn self_check_failed(&self) -> bool {
        self.config.self_check && !self.checks_passed
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

struct Outcome {
    artifacts: Vec<Artifact>,
    checks: Vec<Check>,
    plot: Table,
}

fn plot_table() -> Table {
    Table::new(&["x", "y", "series"])
}

/// Runs one scenario and writes its artifacts plus `manifest.json` into the
/// configured output directory. The directory is checked for writability
/// before any computation starts.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let dir = cfg.output.dir.as_path();
    output::ensure_writable(dir)?;

    let streams = SeedStreams::new(cfg.seed);
    let fmt = cfg.output.format;
    let mut outcome = match &cfg.scenario {
        Scenario::Cat(c) => run_cat(c, &streams, cfg.seed, fmt)?,
        Scenario::Born(b) => run_born(b, &streams, cfg.seed, fmt)?,
        Scenario::Flow(f) => run_flow(f, fmt)?,
        Scenario::Spectrum(s) => run_spectrum(s, &streams, fmt)?,
        Scenario::SuppressionSweep(s) => run_sweep(s, cfg.seed, fmt)?,
    };
    if cfg.output.plot_data {
        outcome.artifacts.push(Artifact::table("plot", &outcome.plot, fmt));
    }

    let files = outcome
        .artifacts
        .iter()
        .map(|a| FileEntry { name: a.name.clone(), bytes: a.bytes.len() as u64, sha256: a.sha256() })
        .collect();
    let checks_passed = outcome.checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        version: VERSION.to_owned(),
        config: cfg.clone(),
        files,
        checks: outcome.checks,
        checks_passed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    outcome.artifacts.push(Artifact::json(MANIFEST_NAME, &manifest));
    output::write_all(dir, &outcome.artifacts)?;
    Ok(manifest)
}

fn complex_table(m: &DMatrix<Complex<f64>>) -> Table {
    let mut t = Table::new(&["row", "col", "re", "im"]);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            t.push(vec![r.into(), c.into(), z.re.into(), z.im.into()]);
        }
    }
    t
}

#[derive(Serialize)]
struct CatReport {
    n: usize,
    p_live: f64,
    phases: PhaseModel,
    /// `joint` when the reduced density comes from the full ensemble density
    /// through a random entangled basis, `phase-average` otherwise.
    route: &'static str,
    reduced_density: [[[f64; 2]; 2]; 2],
    off_diagonal_magnitude: f64,
    mean_phase_factor: [f64; 2],
    closed_form_residual: Option<f64>,
    min_eigenvalue: Option<f64>,
}

fn run_cat(c: &CatConfig, streams: &SeedStreams, seed: u64, fmt: OutputFormat) -> Result<Outcome, RunError> {
    let w = BranchWeights::new(c.p_live)?;
    let env = match c.phases {
        PhaseModel::Grid => EnvironmentEnsemble::uniform_grid(c.n)?,
        PhaseModel::Uniform => EnvironmentEnsemble::random(c.n, &mut streams.stream("phases"))?,
        PhaseModel::Zero => EnvironmentEnsemble::zeros(c.n)?,
    };
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();

    let joint = c.n <= MAX_DENSITY_EXPORT;
    let (reduced, closed_form_residual, min_eigenvalue, density) = if joint {
        let basis = decoherence::sample_entangled_basis::<f64>(c.n, seed)?;
        let rho = decoherence::ensemble_density(&basis, &env, &w)?;
        let closed = decoherence::ensemble_density_closed_form(&env, &w);
        let residual = max_entry_diff(rho.matrix(), closed.matrix());
        let min_eig = (rho.dimension() <= 2 * PSD_CHECK_LIMIT).then(|| rho.min_eigenvalue());
        (decoherence::reduced_system_density(&rho)?, Some(residual), min_eig, Some(rho))
    } else {
        (decoherence::reduced_ensemble_density(&env, &w), None, None, None)
    };

    let m = decoherence::phase_average_suppression(&env).mean;
    let p = c.p_live;
    checks.push(Check::at_most("reduced trace", (reduced[(0, 0)] + reduced[(1, 1)] - 1.0).norm(), EXACT_TOL));
    checks.push(Check::at_most("reduced hermiticity", (reduced[(0, 1)] - reduced[(1, 0)].conj()).norm(), EXACT_TOL));
    checks.push(Check::at_most("live weight", (reduced[(0, 0)] - p).norm(), EXACT_TOL));
    checks.push(Check::at_most("dead weight", (reduced[(1, 1)] - (1.0 - p)).norm(), EXACT_TOL));
    let expected_off = w.coherence() * m;
    checks.push(Check::at_most("coherence matches mean phase", (reduced[(0, 1)] - expected_off).norm(), EXACT_TOL));
    if c.phases == PhaseModel::Grid && c.n > 1 {
        checks.push(Check::at_most("grid phases cancel", reduced[(0, 1)].norm(), EXACT_TOL));
    }
    if let Some(r) = closed_form_residual {
        checks.push(Check::at_most("ensemble equals block form", r, EXACT_TOL));
    }
    if let Some(e) = min_eigenvalue {
        checks.push(Check::at_least("positive semidefinite", e, -EXACT_TOL));
    }

    let reduced_dm = DMatrix::from_fn(2, 2, |r, col| reduced[(r, col)]);
    artifacts.push(Artifact::table("reduced_density", &complex_table(&reduced_dm), fmt));
    if c.export_density {
        if let Some(rho) = &density {
            artifacts.push(Artifact::table("density", &complex_table(rho.matrix()), fmt));
        }
    }
    let report = CatReport {
        n: c.n,
        p_live: p,
        phases: c.phases,
        route: if joint { "joint" } else { "phase-average" },
        reduced_density: [0, 1].map(|r| [0, 1].map(|col| [reduced[(r, col)].re, reduced[(r, col)].im])),
        off_diagonal_magnitude: reduced[(0, 1)].norm(),
        mean_phase_factor: [m.re, m.im],
        closed_form_residual,
        min_eigenvalue,
    };
    artifacts.push(Artifact::json("report.json", &report));

    let mut plot = plot_table();
    for (i, z) in reduced_dm.iter().enumerate() {
        plot.push(vec![i.into(), z.norm().into(), "reduced_abs".into()]);
    }
    for (i, phi) in env.phases().iter().enumerate() {
        plot.push(vec![i.into(), (*phi).into(), "phase".into()]);
    }
    Ok(Outcome { artifacts, checks, plot })
}

fn max_entry_diff(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let bytes = fs::read(path).map_err(|source| RunError::Io { path: path.to_owned(), source })?;
    serde_json::from_slice(&bytes).map_err(|e| RunError::Input { path: path.to_owned(), message: e.to_string() })
}

#[derive(Serialize)]
struct BornReport {
    n: usize,
    #[serde(flatten)]
    ensemble: EnsembleReport,
    predicted: Vec<f64>,
    flagged: Vec<String>,
    abundance: born::AbundanceReport,
}

fn run_born(b: &BornConfig, streams: &SeedStreams, seed: u64, fmt: OutputFormat) -> Result<Outcome, RunError> {
    let perm: PermutationMap = match &b.permutation_file {
        Some(p) => read_json(p)?,
        None => PermutationMap::random(b.n, &mut streams.stream("permutation")),
    };
    let n = perm.size();
    let labeling: OutcomeLabeling = match &b.labeling_file {
        Some(p) => read_json(p)?,
        None => {
            let live = (b.p_live * n as f64).round() as usize;
            OutcomeLabeling::live_shuffled(n, live, &mut streams.stream("labeling"))?
        }
    };
    if labeling.size() != n {
        return Err(RunError::Scenario(format!(
            "labeling covers {} states but the permutation has {n}",
            labeling.size()
        )));
    }
    if b.exhaustive && n > MAX_EXHAUSTIVE {
        return Err(RunError::Scenario(format!("exhaustive enumeration needs n ≤ {MAX_EXHAUSTIVE}, got {n}")));
    }

    let mut ensemble = if b.exhaustive {
        born::enumerate_ontic_frequencies(&perm, &labeling, b.steps, seed)?
    } else {
        born::sample_ontic_frequencies_with(&perm, &labeling, b.steps, b.samples, seed, SamplingOptions::default())?
    };
    // uniform prior: the prediction for a class is its share of final states
    let predicted = labeling.class_fractions();
    let comparison = born::compare_frequencies(&ensemble, &predicted)?;
    ensemble.z_scores = Some(comparison.z_scores.clone());
    let abundance = born::abundance_conservation_check(&perm, &labeling, b.steps)?;

    let mut checks = vec![Check::holds("abundance conserved", abundance.conserved)];
    if b.exhaustive {
        checks.push(Check::holds("exhaustive counts equal class counts", ensemble.counts == labeling.class_counts()));
    } else {
        let worst = comparison.z_scores.iter().fold(0.0_f64, |m, z| m.max(z.abs()));
        checks.push(Check::at_most("largest |z|", worst, born::Z_THRESHOLD));
    }

    let mut summary = Table::new(&["label", "count", "frequency", "predicted", "std_error", "z_score"]);
    let mut plot = plot_table();
    for (i, label) in ensemble.labels.iter().enumerate() {
        summary.push(vec![
            label.as_str().into(),
            ensemble.counts[i].into(),
            ensemble.frequencies[i].into(),
            predicted[i].into(),
            ensemble.std_errors[i].into(),
            comparison.z_scores[i].into(),
        ]);
        plot.push(vec![i.into(), ensemble.frequencies[i].into(), "observed".into()]);
        plot.push(vec![i.into(), predicted[i].into(), "predicted".into()]);
    }
    let report = BornReport { n, ensemble, predicted, flagged: comparison.flagged, abundance };
    let artifacts = vec![Artifact::json("report.json", &report), Artifact::table("summary", &summary, fmt)];
    Ok(Outcome { artifacts, checks, plot })
}

fn read_field_samples(path: &Path) -> Result<Vec<(f64, f64)>, RunError> {
    let bad = |message: String| RunError::Input { path: path.to_owned(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(format!("row {}: expected two columns (x, f), found {}", i + 1, record.len())));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1)));
        samples.push((parse(&record[0])?, parse(&record[1])?));
    }
    Ok(samples)
}

/// Time for the classical path from `x0` to cover `distance`:
/// `∫ dx / |f|` along the direction of the flow at `x0`.
pub fn traversal_time(f: &FlowField, grid: &PeriodicGrid, x0: f64, distance: f64) -> Result<f64, RunError> {
    const PANELS: usize = 1 << 12;
    let dir = f.interpolate(grid, x0).signum();
    let h = distance / PANELS as f64;
    let mut sum = 0.0;
    for i in 0..=PANELS {
        let v = f.interpolate(grid, grid.wrap(x0 + dir * h * i as f64)) * dir;
        if v <= 0.0 || !v.is_finite() {
            return Err(RunError::Scenario("flow stalls or reverses before the requested traversal".into()));
        }
        let weight = if i == 0 || i == PANELS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += weight / v;
    }
    Ok(sum * h / 3.0)
}

#[derive(Serialize)]
struct FlowReport {
    grid_points: usize,
    length: f64,
    spacing: f64,
    sigma: f64,
    center: f64,
    horizon: f64,
    derivative: DerivativeScheme,
    max_deviation: f64,
    relative_deviation: f64,
    norm_drift: f64,
    hermiticity_residual: f64,
}

/// Largest Ehrenfest deviation the self-check accepts, as a fraction of the
/// domain length.
const EHRENFEST_FRACTION: f64 = 0.02;

fn run_flow(c: &FlowConfig, fmt: OutputFormat) -> Result<Outcome, RunError> {
    let grid = PeriodicGrid::new(c.grid_points, c.length)?;
    let field = match &c.field_csv {
        Some(p) => FlowField::from_samples(&grid, &read_field_samples(p)?)?,
        None => FlowField::from_fn(&grid, |x| c.offset + c.amplitude * (TAU * x / c.length).sin())?,
    };
    let center = grid.wrap(c.center);
    let sigma = c.sigma_cells * grid.spacing();
    let packet = GaussianPacket::new(center, sigma, &grid)?;
    let horizon = match c.horizon {
        Horizon::Time(t) => t,
        Horizon::Traversal(frac) => traversal_time(&field, &grid, center, frac * c.length)?,
    };
    let report = flow::ehrenfest_check_with(&packet, &field, &grid, horizon, c.steps, c.derivative)?;
    let h = flow::build_flow_hamiltonian_with(&field, &grid, c.derivative)?;
    let norms = flow::norm_functional_check(&packet.wave_function(&grid), &h, horizon)?;

    let checks = vec![
        Check::at_most("ehrenfest deviation / length", report.max_deviation / c.length, EHRENFEST_FRACTION),
        Check::at_most("norm drift", norms.norm_drift, 1e-9),
        Check::at_most("hermiticity", h.hermiticity_residual(), EXACT_TOL),
    ];

    let mut traj = Table::new(&["t", "expectation", "classical", "deviation"]);
    let mut plot = plot_table();
    for p in &report.trajectory {
        let dev = grid.separation(p.expectation, p.classical).abs();
        traj.push(vec![p.t.into(), p.expectation.into(), p.classical.into(), dev.into()]);
        plot.push(vec![p.t.into(), p.expectation.into(), "expectation".into()]);
        plot.push(vec![p.t.into(), p.classical.into(), "classical".into()]);
    }
    let summary = FlowReport {
        grid_points: c.grid_points,
        length: c.length,
        spacing: grid.spacing(),
        sigma,
        center,
        horizon,
        derivative: c.derivative,
        max_deviation: report.max_deviation,
        relative_deviation: report.max_deviation / c.length,
        norm_drift: norms.norm_drift,
        hermiticity_residual: h.hermiticity_residual(),
    };
    let artifacts = vec![Artifact::table("trajectory", &traj, fmt), Artifact::json("report.json", &summary)];
    Ok(Outcome { artifacts, checks, plot })
}

/// Largest size for which the dense propagator is rebuilt as a self-check.
const ROUNDTRIP_LIMIT: usize = 256;

#[derive(Serialize)]
struct SpectrumReport {
    n: usize,
    cycle_lengths: Vec<usize>,
    orthonormality_residual: f64,
    roundtrip_residual: Option<f64>,
    evolve_state: Option<usize>,
    evolve_time: Option<f64>,
    evolved_norm: Option<f64>,
}

fn run_spectrum(c: &SpectrumConfig, streams: &SeedStreams, fmt: OutputFormat) -> Result<Outcome, RunError> {
    let perm: PermutationMap = match (&c.permutation_file, c.permutation) {
        (Some(p), _) => read_json(p)?,
        (None, PermutationSource::Identity) => PermutationMap::identity(c.n),
        (None, PermutationSource::Random) => PermutationMap::random(c.n, &mut streams.stream("permutation")),
        (None, PermutationSource::Cycle) => PermutationMap::new((0..c.n).map(|i| (i + 1) % c.n).collect())?,
    };
    let n = perm.size();
    let spectrum = HamiltonianSpectrum::<f64>::from_permutation(&perm)?;
    let phases = spectrum.eigenphases();

    let mut checks = vec![
        Check::holds("eigenphases in [0, 2π)", phases.iter().all(|&t| (0.0..TAU).contains(&t))),
        Check::at_most("eigenvector orthonormality", spectrum.orthonormality_residual(), EXACT_TOL),
    ];
    let roundtrip_residual = (n <= ROUNDTRIP_LIMIT).then(|| {
        let u = hilbert::unitary_from_permutation(&perm).to_dense::<f64>();
        max_entry_diff(&spectrum.propagator(1.0), &u)
    });
    if let Some(r) = roundtrip_residual {
        checks.push(Check::at_most("exp(-iH) reproduces U", r, EXACT_TOL));
    }

    let mut table = Table::new(&["index", "eigenphase"]);
    let mut plot = plot_table();
    for (i, &t) in phases.iter().enumerate() {
        table.push(vec![i.into(), t.into()]);
        plot.push(vec![i.into(), t.into(), "eigenphase".into()]);
    }
    let mut artifacts = vec![Artifact::table("spectrum", &table, fmt)];

    let mut evolved_norm = None;
    if let Some(k) = c.evolve_state {
        if k >= n {
            return Err(RunError::Scenario(format!("evolve_state {k} is outside the {n} states")));
        }
        let psi = hilbert::delta_state::<f64>(OnticState(k), n)?;
        let out = hilbert::schrodinger_evolve(&psi, &spectrum, c.evolve_time)?;
        evolved_norm = Some(out.norm());
        checks.push(Check::at_most("norm preserved", (out.norm() - 1.0).abs(), EXACT_TOL));
        if c.evolve_time >= 0.0 && c.evolve_time.fract() == 0.0 {
            let target = perm.evolve(OnticState(k), c.evolve_time as u64)?.0;
            let probs = out.probabilities();
            let stray = probs.iter().enumerate().filter(|&(j, _)| j != target).fold(0.0_f64, |m, (_, &p)| m.max(p.sqrt()));
            checks.push(Check::at_least("delta stays a delta", probs[target].sqrt(), 1.0 - 1e-8));
            checks.push(Check::at_most("no spreading", stray, 1e-8));
        }
        let mut wf = Table::new(&["index", "re", "im"]);
        for (j, z) in out.amplitudes().iter().enumerate() {
            wf.push(vec![j.into(), z.re.into(), z.im.into()]);
            plot.push(vec![j.into(), z.norm_sqr().into(), "probability".into()]);
        }
        artifacts.push(Artifact::table("wavefunction", &wf, fmt));
    }

    let report = SpectrumReport {
        n,
        cycle_lengths: perm.cycle_decomposition().lengths(),
        orthonormality_residual: spectrum.orthonormality_residual(),
        roundtrip_residual,
        evolve_state: c.evolve_state,
        evolve_time: c.evolve_state.map(|_| c.evolve_time),
        evolved_norm,
    };
    artifacts.push(Artifact::json("report.json", &report));
    Ok(Outcome { artifacts, checks, plot })
}

#[derive(Serialize)]
struct SweepReport {
    p_live: f64,
    seeds: u64,
    medians: Vec<(usize, f64)>,
    slope: f64,
}

/// Accepted range of the fitted log-log slope (random-walk cancellation).
const SLOPE_RANGE: (f64, f64) = (-0.6, -0.4);

fn run_sweep(c: &SweepConfig, seed: u64, fmt: OutputFormat) -> Result<Outcome, RunError> {
    let w = BranchWeights::new(c.p_live)?;
    let sweep = decoherence::suppression_sweep(&c.sizes, c.seeds, seed, &w)?;
    let mut checks = Vec::new();
    if c.sizes.len() >= 2 && c.p_live > 0.0 && c.p_live < 1.0 {
        checks.push(Check::at_least("slope lower bound", sweep.slope, SLOPE_RANGE.0));
        checks.push(Check::at_most("slope upper bound", sweep.slope, SLOPE_RANGE.1));
    }

    let mut table = Table::new(&["N", "seed", "magnitude"]);
    for s in &sweep.samples {
        table.push(vec![s.size.into(), s.seed.into(), s.magnitude.into()]);
    }
    let mut plot = plot_table();
    for s in &sweep.samples {
        plot.push(vec![s.size.into(), s.magnitude.into(), "magnitude".into()]);
    }
    for &(n, m) in &sweep.medians {
        plot.push(vec![n.into(), m.into(), "median".into()]);
    }
    if sweep.slope.is_finite() {
        // least-squares line through the medians, evaluated at each size
        let k = sweep.medians.len() as f64;
        let mx = sweep.medians.iter().map(|p| (p.0 as f64).ln()).sum::<f64>() / k;
        let my = sweep.medians.iter().map(|p| p.1.ln()).sum::<f64>() / k;
        for &(n, _) in &sweep.medians {
            let y = (my + sweep.slope * ((n as f64).ln() - mx)).exp();
            plot.push(vec![n.into(), Cell::Float(y), "fit".into()]);
        }
    }
    let report = SweepReport { p_live: c.p_live, seeds: c.seeds, medians: sweep.medians, slope: sweep.slope };
    let artifacts = vec![Artifact::table("sweep", &table, fmt), Artifact::json("report.json", &report)];
    Ok(Outcome { artifacts, checks, plot })
}
