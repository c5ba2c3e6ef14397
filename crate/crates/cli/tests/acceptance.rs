//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p ontic-cli --test acceptance`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::time::{Duration, Instant};

use ontic_cli::config::{validate_config_with, Overrides};
use ontic_cli::{run_scenario, ScenarioConfig, MANIFEST_NAME};
use ontic_core::decoherence;
use ontic_core::hilbert::{self, HamiltonianSpectrum};
use ontic_core::{BranchWeights, EnvironmentEnsemble, OnticState, PermutationMap, SeedStreams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn config(raw: &str, out: &Path) -> ScenarioConfig {
    let o = Overrides { out: Some(out.to_owned()), ..Default::default() };
    validate_config_with(raw, &o).expect("acceptance config is valid")
}

const CAT: &str = "kind = \"cat\"\nseed = 1\n[cat]\nn = 16\np_live = 0.6\nphases = \"grid\"\n";
const BORN_EXHAUSTIVE: &str =
    "kind = \"born\"\nseed = 7\n[born]\nn = 100000\nsteps = 1000\np_live = 0.6\nexhaustive = true\n";
const BORN_SAMPLED: &str = "kind = \"born\"\nseed = 7\n[born]\nn = 100000\nsteps = 1000\np_live = 0.6\nsamples = 1000000\n";

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect()
}

fn cat_density() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let manifest = run_scenario(&config(CAT, dir.path())).unwrap();
    let elapsed = start.elapsed();
    let rows = read_csv(&dir.path().join("reduced_density.csv"));
    let expected = [[0.6, 0.0], [0.0, 0.4]];
    let mut err: f64 = 0.0;
    for row in &rows {
        let (r, c): (usize, usize) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        let (re, im): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        err = err.max((re - expected[r][c]).abs()).max(im.abs());
    }
    let ok = rows.len() == 4 && err <= 1e-10 && elapsed < Duration::from_secs(1) && manifest.checks_passed;
    verdict(ok, format!("max entry error {err:.2e}, {:.3}s", elapsed.as_secs_f64()))
}

fn ensemble_blocks() -> Verdict {
    let w = BranchWeights::new(0.6).unwrap();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for n in [4, 16, 64, 128] {
        for seed in 0..20 {
            let basis = decoherence::sample_entangled_basis::<f64>(n, seed).unwrap();
            let env = EnvironmentEnsemble::random(n, &mut SeedStreams::new(seed).stream("phases")).unwrap();
            let rho = decoherence::ensemble_density(&basis, &env, &w).unwrap();
            let closed = decoherence::ensemble_density_closed_form(&env, &w);
            let diff = rho.matrix().iter().zip(closed.matrix().iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(diff);
            runs += 1;
        }
    }
    verdict(worst <= 1e-10, format!("{runs} runs, max entry error {worst:.2e}"))
}

fn decoherence_scaling() -> Verdict {
    let w = BranchWeights::new(0.6).unwrap();
    let sweep = decoherence::suppression_sweep(&[100, 1000, 10_000, 100_000], 200, 2024, &w).unwrap();
    let ok = (-0.6..=-0.4).contains(&sweep.slope);
    verdict(ok, format!("slope {:.4}", sweep.slope))
}

fn born_report(raw: &str, seed: u64) -> serde_json::Value {
    let dir = tempfile::tempdir().unwrap();
    let o = Overrides { out: Some(dir.path().to_owned()), seed: Some(seed), ..Default::default() };
    run_scenario(&validate_config_with(raw, &o).unwrap()).unwrap();
    serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap()
}

/// Each seed is a full scenario run: permutation, labeling and samples all
/// derive from it.
fn born_abundance() -> Verdict {
    let exact = born_report(BORN_EXHAUSTIVE, 7);
    let exact_ok = exact["counts"] == serde_json::json!([60_000, 40_000]) && exact["frequencies"] == serde_json::json!([0.6, 0.4]);
    let within = (0..100_u64)
        .filter(|&seed| {
            let r = born_report(BORN_SAMPLED, seed);
            (r["frequencies"][0].as_f64().unwrap() - 0.6).abs() <= 0.0015
        })
        .count();
    verdict(
        exact_ok && within >= 99,
        format!("exhaustive {}, Monte Carlo within ±0.0015 for {within}/100 seeds", exact["frequencies"]),
    )
}

fn hamiltonian_roundtrip() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut phases_ok = true;
    for _ in 0..100 {
        let n = rng.random_range(1..=256);
        let perm = PermutationMap::random(n, &mut rng);
        let h = HamiltonianSpectrum::<f64>::from_permutation(&perm).unwrap();
        phases_ok &= h.eigenphases().iter().all(|&t| (0.0..TAU).contains(&t));
        let u = hilbert::unitary_from_permutation(&perm).to_dense::<f64>();
        let diff = h.propagator(1.0).iter().zip(u.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    verdict(worst <= 1e-10 && phases_ok, format!("max |exp(-iH) - U| {worst:.2e}, phases in range: {phases_ok}"))
}

fn non_spreading() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (mut peak_min, mut stray_max, mut norm_err): (f64, f64, f64) = (1.0, 0.0, 0.0);
    for _ in 0..50 {
        let n = rng.random_range(2..=256);
        let perm = PermutationMap::random(n, &mut rng);
        let k = rng.random_range(0..n);
        let t = rng.random_range(0..10_000_u64);
        let h = HamiltonianSpectrum::<f64>::from_permutation(&perm).unwrap();
        let psi = hilbert::delta_state::<f64>(OnticState(k), n).unwrap();
        let out = hilbert::schrodinger_evolve(&psi, &h, t as f64).unwrap();
        let target = perm.evolve(OnticState(k), t).unwrap().0;
        for (j, z) in out.amplitudes().iter().enumerate() {
            if j == target {
                peak_min = peak_min.min(z.norm());
            } else {
                stray_max = stray_max.max(z.norm());
            }
        }
        norm_err = norm_err.max((out.norm() - 1.0).abs());
    }
    let ok = peak_min >= 1.0 - 1e-8 && stray_max <= 1e-8 && norm_err <= 1e-10;
    verdict(ok, format!("min peak {peak_min:.12}, max stray {stray_max:.2e}, norm error {norm_err:.2e}"))
}

fn flow_deviation(points: usize, sigma_cells: usize) -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let raw = format!(
        "kind = \"flow\"\nseed = 0\n[flow]\ngrid_points = {points}\nsigma_cells = {sigma_cells}\noffset = 0.3\namplitude = 0.1\ntraversal = 0.25\nsteps = 50\n"
    );
    run_scenario(&config(&raw, dir.path())).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    report["relative_deviation"].as_f64().unwrap()
}

fn ehrenfest() -> Verdict {
    let coarse = flow_deviation(256, 8);
    let fine = flow_deviation(512, 16);
    let ok = coarse <= 0.02 && fine <= coarse + 1e-8;
    verdict(ok, format!("deviation/L {coarse:.6e} at M=256, {fine:.6e} at M=512"))
}

/// Every emitted file except the manifest, which records wall time.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != MANIFEST_NAME)
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

fn run_in_pool(raw: &str, threads: usize) -> (BTreeMap<String, Vec<u8>>, Vec<ontic_cli::run::FileEntry>) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(raw, dir.path());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let manifest = pool.install(|| run_scenario(&cfg)).unwrap();
    (outputs(dir.path()), manifest.files)
}

fn determinism() -> Verdict {
    let mut mismatches = Vec::new();
    for (name, raw) in [("cat", CAT), ("born exhaustive", BORN_EXHAUSTIVE), ("born sampled", BORN_SAMPLED)] {
        let (a, fa) = run_in_pool(raw, 1);
        let (b, fb) = run_in_pool(raw, 4);
        let (c, fc) = run_in_pool(raw, 4);
        if a != b || b != c || fa != fb || fb != fc || a.is_empty() {
            mismatches.push(name);
        }
    }
    verdict(mismatches.is_empty(), format!("3 scenarios x (1, 4, 4 threads); mismatched: {mismatches:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 8] = [
        ("cat density matrix", cat_density, Duration::from_secs(1)),
        ("ensemble block identity", ensemble_blocks, Duration::from_secs(30)),
        ("decoherence scaling", decoherence_scaling, Duration::from_secs(120)),
        ("born-rule abundance", born_abundance, Duration::from_secs(60)),
        ("hamiltonian roundtrip", hamiltonian_roundtrip, Duration::from_secs(60)),
        ("non-spreading", non_spreading, Duration::from_secs(30)),
        ("ehrenfest tracking", ehrenfest, Duration::from_secs(120)),
        ("determinism", determinism, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let ok = v.passed && elapsed <= *budget;
        failed += usize::from(!ok);
        println!(
            "{} {}. {name}: {} [{:.2}s / {}s budget]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
