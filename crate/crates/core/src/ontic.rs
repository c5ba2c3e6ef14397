//! The deterministic layer: a finite ontic state space evolving under a
//! reversible (bijective) map, its cycle structure, and the partition of
//! states into macroscopic outcome classes.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One configuration of the automaton, as a flat index into `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OnticState(pub usize);

impl OnticState {
    pub fn index(self) -> usize {
        self.0
    }

    fn check(self, size: usize) -> Result<Self> {
        if self.0 < size {
            Ok(self)
        } else {
            Err(Error::IndexOutOfRange { index: self.0, size })
        }
    }
}

impl fmt::Display for OnticState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A bijection on `[0, N)`; `targets[k]` is the successor of state `k`.
///
/// Bijectivity is checked when the map is built, so every downstream routine
/// may assume it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PermutationMap {
    targets: Vec<usize>,
}

impl PermutationMap {
    pub fn new(targets: Vec<usize>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::NotBijective("empty state space".into()));
        }
        let n = targets.len();
        let mut seen = vec![false; n];
        for (k, &t) in targets.iter().enumerate() {
            if t >= n {
                return Err(Error::NotBijective(format!(
                    "target {t} of state {k} is outside [0, {n})"
                )));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::NotBijective(format!("state {t} has two predecessors")));
            }
        }
        Ok(PermutationMap { targets })
    }

    pub fn identity(size: usize) -> Self {
        assert!(size > 0, "state space must be non-empty");
        PermutationMap { targets: (0..size).collect() }
    }

    /// Uniformly random permutation (Fisher–Yates).
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Self {
        assert!(size > 0, "state space must be non-empty");
        let mut targets: Vec<usize> = (0..size).collect();
        targets.shuffle(rng);
        PermutationMap { targets }
    }

    /// Builds the map from disjoint cycles; states not mentioned are fixed.
    pub fn from_cycles(size: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut targets: Vec<usize> = (0..size).collect();
        let mut used = vec![false; size];
        for cycle in cycles {
            for (i, &s) in cycle.iter().enumerate() {
                OnticState(s).check(size)?;
                if std::mem::replace(&mut used[s], true) {
                    return Err(Error::NotBijective(format!("state {s} appears in two cycles")));
                }
                targets[s] = cycle[(i + 1) % cycle.len()];
            }
        }
        Self::new(targets)
    }

    pub fn size(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn step(&self, s: OnticState) -> Result<OnticState> {
        s.check(self.size())?;
        Ok(OnticState(self.targets[s.0]))
    }

    /// `t`-fold application of [`step`](Self::step), reduced modulo the length
    /// of the orbit through `s`; costs O(orbit length) for any `t`.
    pub fn evolve(&self, s: OnticState, t: u64) -> Result<OnticState> {
        s.check(self.size())?;
        let mut len = 1_u64;
        let mut cur = self.targets[s.0];
        while cur != s.0 {
            if len == t {
                return Ok(OnticState(cur));
            }
            cur = self.targets[cur];
            len += 1;
        }
        let mut cur = s.0;
        for _ in 0..t % len {
            cur = self.targets[cur];
        }
        Ok(OnticState(cur))
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.size()];
        for (k, &t) in self.targets.iter().enumerate() {
            inv[t] = k;
        }
        PermutationMap { targets: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        crate::error::check_dim(self.size(), other.size())?;
        let targets = other.targets.iter().map(|&k| self.targets[k]).collect();
        Ok(PermutationMap { targets })
    }

    pub fn is_identity(&self) -> bool {
        self.targets.iter().enumerate().all(|(k, &t)| k == t)
    }

    /// Disjoint orbits covering `[0, N)`, each listed in traversal order
    /// starting from its smallest state; cycles are ordered by that state.
    pub fn cycle_decomposition(&self) -> CycleDecomposition {
        let n = self.size();
        let mut cycle_of = vec![usize::MAX; n];
        let mut position = vec![0; n];
        let mut order = Vec::with_capacity(n);
        let mut starts = vec![0];
        for start in 0..n {
            if cycle_of[start] != usize::MAX {
                continue;
            }
            let id = starts.len() - 1;
            let mut cur = start;
            let mut pos = 0;
            loop {
                cycle_of[cur] = id;
                position[cur] = pos;
                order.push(cur);
                pos += 1;
                cur = self.targets[cur];
                if cur == start {
                    break;
                }
            }
            starts.push(order.len());
        }
        CycleDecomposition { order, starts, cycle_of, position }
    }

    /// `t`-fold power as a new map, computed in O(N) via the cycle structure.
    pub fn power(&self, t: u64) -> Self {
        let cycles = self.cycle_decomposition();
        let targets = (0..self.size()).map(|k| cycles.advance(k, t)).collect();
        PermutationMap { targets }
    }
}

impl TryFrom<Vec<usize>> for PermutationMap {
    type Error = Error;

    fn try_from(targets: Vec<usize>) -> Result<Self> {
        Self::new(targets)
    }
}

impl From<PermutationMap> for Vec<usize> {
    fn from(m: PermutationMap) -> Self {
        m.targets
    }
}

/// Orbit structure of a [`PermutationMap`], with per-state lookup tables so
/// that evolving any state by any number of steps is O(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDecomposition {
    order: Vec<usize>,
    starts: Vec<usize>,
    cycle_of: Vec<usize>,
    position: Vec<usize>,
}

impl CycleDecomposition {
    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn cycle(&self, id: usize) -> &[usize] {
        &self.order[self.starts[id]..self.starts[id + 1]]
    }

    pub fn cycles(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.len()).map(move |id| self.cycle(id))
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.starts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn cycle_length_of(&self, s: OnticState) -> Result<usize> {
        s.check(self.size())?;
        let id = self.cycle_of[s.0];
        Ok(self.starts[id + 1] - self.starts[id])
    }

    pub fn evolve(&self, s: OnticState, t: u64) -> Result<OnticState> {
        s.check(self.size())?;
        Ok(OnticState(self.advance(s.0, t)))
    }

    #[inline]
    pub(crate) fn advance(&self, k: usize, t: u64) -> usize {
        let id = self.cycle_of[k];
        let base = self.starts[id];
        let len = (self.starts[id + 1] - base) as u64;
        let pos = (self.position[k] as u64 + t % len) % len;
        self.order[base + pos as usize]
    }
}

/// Name of the outcome class for states that end with a live cat.
pub const LIVE: &str = "live";
/// Name of the outcome class for states that end with a dead cat.
pub const DEAD: &str = "dead";

/// Assignment of every ontic state to exactly one macroscopic outcome.
///
/// Labels are stored as indices into a small alphabet of names, in order of
/// first appearance unless the alphabet is given explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct OutcomeLabeling {
    names: Vec<String>,
    labels: Vec<usize>,
}

impl OutcomeLabeling {
    /// Labeling over an explicit alphabet; `labels[k]` indexes into `names`.
    pub fn with_alphabet(names: Vec<String>, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("labeling must cover at least one state".into()));
        }
        if names.is_empty() {
            return Err(Error::Domain("label alphabet is empty".into()));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::Domain(format!("label '{a}' listed twice in the alphabet")));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= names.len()) {
            return Err(Error::IndexOutOfRange { index: bad, size: names.len() });
        }
        Ok(OutcomeLabeling { names, labels })
    }

    pub fn from_names<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut ids = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let id = match names.iter().position(|n| n == l) {
                Some(id) => id,
                None => {
                    names.push(l.to_owned());
                    names.len() - 1
                }
            };
            ids.push(id);
        }
        Self::with_alphabet(names, ids)
    }

    /// Every state carries the same label.
    pub fn uniform(size: usize, name: &str) -> Self {
        assert!(size > 0, "state space must be non-empty");
        OutcomeLabeling { names: vec![name.to_owned()], labels: vec![0; size] }
    }

    /// `[live, dead]` alphabet with the first `live_count` states live.
    pub fn live_prefix(size: usize, live_count: usize) -> Result<Self> {
        if live_count > size {
            return Err(Error::Domain(format!("live count {live_count} exceeds {size} states")));
        }
        let labels = (0..size).map(|k| usize::from(k >= live_count)).collect();
        Self::with_alphabet(vec![LIVE.into(), DEAD.into()], labels)
    }

    /// `[live, dead]` alphabet with exactly `live_count` live states at
    /// uniformly random positions.
    pub fn live_shuffled<R: Rng + ?Sized>(size: usize, live_count: usize, rng: &mut R) -> Result<Self> {
        let mut l = Self::live_prefix(size, live_count)?;
        l.labels.shuffle(rng);
        Ok(l)
    }

    /// `[live, dead]` alphabet with each state live independently with
    /// probability `p_live`.
    pub fn live_bernoulli<R: Rng + ?Sized>(size: usize, p_live: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_live) {
            return Err(Error::Domain(format!("p_live = {p_live} is not in [0, 1]")));
        }
        let labels = (0..size).map(|_| usize::from(!rng.random_bool(p_live))).collect();
        Self::with_alphabet(vec![LIVE.into(), DEAD.into()], labels)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, label: usize) -> &str {
        &self.names[label]
    }

    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Label index of state `s`.
    pub fn classify(&self, s: OnticState) -> Result<usize> {
        s.check(self.size())?;
        Ok(self.labels[s.0])
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0_u64; self.names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// `count / N` per label, in alphabet order.
    pub fn class_fractions(&self) -> Vec<f64> {
        let n = self.size() as f64;
        self.class_counts().into_iter().map(|c| c as f64 / n).collect()
    }

    /// The labeling `k ↦ self(m^t(k))`: classifies initial states by the
    /// outcome they are destined for after `t` steps.
    pub fn pullback(&self, m: &PermutationMap, t: u64) -> Result<Self> {
        crate::error::check_dim(self.size(), m.size())?;
        let cycles = m.cycle_decomposition();
        let labels = (0..self.size()).map(|k| self.labels[cycles.advance(k, t)]).collect();
        Ok(OutcomeLabeling { names: self.names.clone(), labels })
    }
}

impl TryFrom<Vec<String>> for OutcomeLabeling {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::from_names(&labels)
    }
}

impl From<OutcomeLabeling> for Vec<String> {
    fn from(l: OutcomeLabeling) -> Self {
        l.labels.iter().map(|&i| l.names[i].clone()).collect()
    }
}

pub fn step(s: OnticState, m: &PermutationMap) -> Result<OnticState> {
    m.step(s)
}

pub fn evolve(s: OnticState, m: &PermutationMap, t: u64) -> Result<OnticState> {
    m.evolve(s, t)
}

pub fn cycle_decomposition(m: &PermutationMap) -> CycleDecomposition {
    m.cycle_decomposition()
}

pub fn inverse(m: &PermutationMap) -> PermutationMap {
    m.inverse()
}

pub fn classify(s: OnticState, l: &OutcomeLabeling) -> Result<usize> {
    l.classify(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn step_examples() {
        assert_eq!(step(OnticState(3), &PermutationMap::identity(5)).unwrap(), OnticState(3));
        let m = PermutationMap::new(vec![1, 2, 0]).unwrap();
        assert_eq!(step(OnticState(0), &m).unwrap(), OnticState(1));
        assert_eq!(
            step(OnticState(3), &m),
            Err(Error::IndexOutOfRange { index: 3, size: 3 })
        );
    }

    #[test]
    fn step_agrees_with_cycle_successor() {
        let m = PermutationMap::random(64, &mut rng(1));
        let cycles = m.cycle_decomposition();
        for c in cycles.cycles() {
            for (i, &s) in c.iter().enumerate() {
                let succ = c[(i + 1) % c.len()];
                assert_eq!(m.step(OnticState(s)).unwrap(), OnticState(succ));
            }
        }
    }

    #[test]
    fn evolve_examples() {
        let m = PermutationMap::new(vec![1, 2, 0]).unwrap();
        assert_eq!(evolve(OnticState(2), &m, 0).unwrap(), OnticState(2));
        assert_eq!(evolve(OnticState(0), &m, 3).unwrap(), OnticState(0));
        assert_eq!(evolve(OnticState(0), &m, 4).unwrap(), OnticState(1));
    }

    #[test]
    fn evolve_huge_horizon_matches_reduced_brute_force() {
        let m = PermutationMap::random(10, &mut rng(2));
        let cycles = m.cycle_decomposition();
        for t in [1_000_000_000_u64, 999_999_999_999_999_999, u64::MAX] {
            for k in 0..10 {
                let len = cycles.cycle_length_of(OnticState(k)).unwrap() as u64;
                let mut brute = k;
                for _ in 0..t % len {
                    brute = m.targets()[brute];
                }
                assert_eq!(m.evolve(OnticState(k), t).unwrap(), OnticState(brute));
                assert_eq!(cycles.evolve(OnticState(k), t).unwrap(), OnticState(brute));
            }
        }
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(matches!(PermutationMap::new(vec![0, 0]), Err(Error::NotBijective(_))));
        assert!(matches!(PermutationMap::new(vec![0, 2]), Err(Error::NotBijective(_))));
        assert!(matches!(PermutationMap::new(vec![]), Err(Error::NotBijective(_))));
        assert!(serde_json::from_str::<PermutationMap>("[1, 1, 0]").is_err());
    }

    #[test]
    fn cycle_decomposition_examples() {
        let id = cycle_decomposition(&PermutationMap::identity(4));
        assert_eq!(id.lengths(), vec![1, 1, 1, 1]);
        let swaps = cycle_decomposition(&PermutationMap::new(vec![1, 0, 3, 2]).unwrap());
        let cycles: Vec<&[usize]> = swaps.cycles().collect();
        assert_eq!(cycles, vec![&[0, 1][..], &[2, 3][..]]);
    }

    #[test]
    fn random_cycles_cover_and_close() {
        let m = PermutationMap::random(128, &mut rng(3));
        let cycles = m.cycle_decomposition();
        assert_eq!(cycles.lengths().iter().sum::<usize>(), 128);
        let mut seen = vec![false; 128];
        for c in cycles.cycles() {
            let mut cur = c[0];
            for &s in c {
                assert_eq!(cur, s);
                assert!(!std::mem::replace(&mut seen[s], true));
                cur = m.targets()[cur];
            }
            assert_eq!(cur, c[0]);
        }
        assert!(seen.into_iter().all(|x| x));
    }

    #[test]
    fn from_cycles_roundtrip() {
        let m = PermutationMap::from_cycles(5, &[vec![0, 3], vec![1, 4, 2]]).unwrap();
        assert_eq!(m.targets(), &[3, 4, 1, 0, 2]);
        assert!(PermutationMap::from_cycles(3, &[vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert!(inverse(&PermutationMap::identity(6)).is_identity());
        let m = PermutationMap::new(vec![1, 2, 0]).unwrap();
        assert_eq!(inverse(&m).targets(), &[2, 0, 1]);
        let r = PermutationMap::random(200, &mut rng(4));
        assert!(r.inverse().compose(&r).unwrap().is_identity());
        assert!(r.compose(&r.inverse()).unwrap().is_identity());
    }

    #[test]
    fn power_matches_iterated_composition() {
        let m = PermutationMap::random(30, &mut rng(5));
        let mut acc = PermutationMap::identity(30);
        for t in 0..40 {
            assert_eq!(m.power(t), acc);
            acc = m.compose(&acc).unwrap();
        }
    }

    #[test]
    fn classify_examples() {
        let all = OutcomeLabeling::uniform(7, LIVE);
        assert_eq!(all.name(classify(OnticState(4), &all).unwrap()), LIVE);
        let split = OutcomeLabeling::live_prefix(10, 6).unwrap();
        assert_eq!(split.name(classify(OnticState(7), &split).unwrap()), DEAD);
        assert_eq!(split.name(classify(OnticState(5), &split).unwrap()), LIVE);
        assert!(classify(OnticState(10), &split).is_err());
    }

    #[test]
    fn bernoulli_labeling_fraction() {
        let l = OutcomeLabeling::live_bernoulli(100_000, 0.6, &mut rng(6)).unwrap();
        let live = l.class_fractions()[l.label_id(LIVE).unwrap()];
        assert!((live - 0.6).abs() <= 0.01, "live fraction {live}");
        let total: f64 = l.class_fractions().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shuffled_labeling_has_exact_counts() {
        let l = OutcomeLabeling::live_shuffled(1000, 600, &mut rng(7)).unwrap();
        assert_eq!(l.class_counts(), vec![600, 400]);
        assert_ne!(l, OutcomeLabeling::live_prefix(1000, 600).unwrap());
    }

    #[test]
    fn labeling_json_uses_label_strings() {
        let l = OutcomeLabeling::live_prefix(3, 2).unwrap();
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(json, r#"["live","live","dead"]"#);
        let back: OutcomeLabeling = serde_json::from_str(&json).unwrap();
        assert_eq!(back, l);
        let m: PermutationMap = serde_json::from_str("[2, 0, 1]").unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[2,0,1]");
    }
}
