//! Scenario configuration: a TOML document validated strictly.
//!
//! Validation never stops at the first problem; every unknown key, missing
//! required value and out-of-range field is reported together.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
    pub plot_data: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseModel {
    /// `φ_i = 2πi/N`
    Grid,
    /// i.i.d. uniform on `[0, 2π)`
    Uniform,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatConfig {
    pub n: usize,
    pub p_live: f64,
    pub phases: PhaseModel,
    pub export_density: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BornConfig {
    pub n: usize,
    pub samples: u64,
    pub steps: u64,
    pub p_live: f64,
    pub exhaustive: bool,
    pub permutation_file: Option<PathBuf>,
    pub labeling_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// Evolve for a fixed time.
    Time(f64),
    /// Evolve until the classical path has moved this fraction of the domain.
    Traversal(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowConfig {
    pub grid_points: usize,
    pub length: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub field_csv: Option<PathBuf>,
    pub center: f64,
    pub sigma_cells: f64,
    pub horizon: Horizon,
    pub steps: usize,
    pub derivative: ontic_core::flow::DerivativeScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PermutationSource {
    Identity,
    Random,
    /// A single cycle through every state.
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumConfig {
    pub n: usize,
    pub permutation: PermutationSource,
    pub permutation_file: Option<PathBuf>,
    pub evolve_state: Option<usize>,
    pub evolve_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub seeds: u64,
    pub p_live: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Cat(CatConfig),
    Born(BornConfig),
    Flow(FlowConfig),
    Spectrum(SpectrumConfig),
    SuppressionSweep(SweepConfig),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Cat(_) => "cat",
            Scenario::Born(_) => "born",
            Scenario::Flow(_) => "flow",
            Scenario::Spectrum(_) => "spectrum",
            Scenario::SuppressionSweep(_) => "suppression-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub self_check: bool,
    pub scenario: Scenario,
    pub output: OutputConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    /// Relative file paths in the config resolve against this directory.
    pub base_dir: Option<PathBuf>,
}

/// Largest cat size whose full joint density is built and exported.
pub const MAX_DENSITY_EXPORT: usize = 256;

/// Largest state space the born scenario will enumerate.
pub const MAX_EXHAUSTIVE: usize = 1_000_000;

const KINDS: [&str; 5] = ["cat", "born", "flow", "spectrum", "suppression-sweep"];

/// Section name holding the parameters of each kind.
fn section_of(kind: &str) -> &'static str {
    match kind {
        "cat" => "cat",
        "born" => "born",
        "flow" => "flow",
        "spectrum" => "spectrum",
        _ => "sweep",
    }
}

/// Collects errors while reading typed values out of one table.
struct Reader<'a> {
    prefix: String,
    table: Option<&'a Table>,
    used: Vec<&'static str>,
    errors: &'a mut Vec<ValidationError>,
}

impl<'a> Reader<'a> {
    fn new(prefix: &str, table: Option<&'a Table>, errors: &'a mut Vec<ValidationError>) -> Self {
        Reader { prefix: prefix.to_owned(), table, used: Vec::new(), errors }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_owned()
        } else {
            format!("{}.{}", self.prefix, key)
        }
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        let field = self.path(key);
        self.errors.push(ValidationError { field, message: message.into() });
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn integer(&mut self, key: &'static str) -> Option<i64> {
        match self.raw(key)? {
            Value::Integer(i) => Some(*i),
            other => {
                self.error(key, format!("expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    /// Integer `≥ min`; `default` when absent.
    fn count(&mut self, key: &'static str, default: Option<u64>, min: u64) -> Option<u64> {
        let present = self.table.is_some_and(|t| t.contains_key(key));
        match self.integer(key) {
            Some(i) if i >= 0 && i as u64 >= min => Some(i as u64),
            Some(i) => {
                self.error(key, format!("must be at least {min}, got {i}"));
                None
            }
            None if present => None,
            None => {
                if default.is_none() {
                    self.error(key, "is required");
                }
                default
            }
        }
    }

    fn real(&mut self, key: &'static str, default: Option<f64>) -> Option<f64> {
        let value = match self.raw(key) {
            Some(Value::Float(x)) => *x,
            Some(Value::Integer(i)) => *i as f64,
            Some(other) => {
                let t = other.type_str();
                self.error(key, format!("expected a number, found {t}"));
                return None;
            }
            None => {
                if default.is_none() {
                    self.error(key, "is required");
                }
                return default;
            }
        };
        if !value.is_finite() {
            self.error(key, "must be finite");
            return None;
        }
        Some(value)
    }

    fn real_in(&mut self, key: &'static str, default: Option<f64>, lo: f64, hi: f64, bound: &str) -> Option<f64> {
        let v = self.real(key, default)?;
        if v < lo || v > hi {
            self.error(key, format!("must be in {bound}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn positive(&mut self, key: &'static str, default: Option<f64>) -> Option<f64> {
        let v = self.real(key, default)?;
        if v <= 0.0 {
            self.error(key, format!("must be positive, got {v}"));
            return None;
        }
        Some(v)
    }

    fn boolean(&mut self, key: &'static str, default: bool) -> bool {
        match self.raw(key) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                let t = other.type_str();
                self.error(key, format!("expected true or false, found {t}"));
                default
            }
            None => default,
        }
    }

    fn string(&mut self, key: &'static str) -> Option<&'a str> {
        match self.raw(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                let t = other.type_str();
                self.error(key, format!("expected a string, found {t}"));
                None
            }
        }
    }

    fn choice<T>(&mut self, key: &'static str, default: T, options: &[(&str, T)]) -> Option<T>
    where
        T: Copy,
    {
        let Some(s) = self.string(key) else {
            let present = self.table.is_some_and(|t| t.contains_key(key));
            return if present { None } else { Some(default) };
        };
        match options.iter().find(|(name, _)| *name == s) {
            Some(&(_, v)) => Some(v),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.error(key, format!("must be one of {}, got '{s}'", names.join(" | ")));
                None
            }
        }
    }

    fn path_value(&mut self, key: &'static str, base: Option<&Path>) -> Option<PathBuf> {
        let s = self.string(key)?;
        let p = PathBuf::from(s);
        Some(match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        })
    }

    fn finish(self) {
        let Some(table) = self.table else { return };
        let mut unknown: Vec<&String> = table.keys().filter(|k| !self.used.contains(&k.as_str())).collect();
        unknown.sort();
        for k in unknown {
            let field = if self.prefix.is_empty() { k.clone() } else { format!("{}.{}", self.prefix, k) };
            self.errors.push(ValidationError { field, message: "unknown key".into() });
        }
    }
}

fn section<'a>(root: &'a Table, name: &str, errors: &mut Vec<ValidationError>) -> Option<&'a Table> {
    match root.get(name) {
        Some(Value::Table(t)) => Some(t),
        Some(other) => {
            errors.push(ValidationError { field: name.into(), message: format!("expected a table, found {}", other.type_str()) });
            None
        }
        None => None,
    }
}

/// Parses and validates a configuration without any command-line overrides.
pub fn validate_config(raw: &str) -> Result<ScenarioConfig, Vec<ValidationError>> {
    validate_config_with(raw, &Overrides::default())
}

pub fn validate_config_with(raw: &str, overrides: &Overrides) -> Result<ScenarioConfig, Vec<ValidationError>> {
    let root: Table = toml::from_str(raw)
        .map_err(|e| vec![ValidationError { field: "<document>".into(), message: e.message().to_owned() }])?;
    let mut errors = Vec::new();
    let base = overrides.base_dir.as_deref();

    let mut top = Reader::new("", Some(&root), &mut errors);
    let kind = top.choice("kind", None, &KINDS.map(|k| (k, Some(k)))).flatten();
    if kind.is_none() && !root.contains_key("kind") {
        top.error("kind", "is required");
    }
    let seed = match overrides.seed {
        Some(s) => {
            top.used.push("seed");
            Some(s)
        }
        None => top.count("seed", None, 0),
    };
    let self_check = top.boolean("self_check", false);
    top.used.extend(["output", "cat", "born", "flow", "spectrum", "sweep"]);
    top.finish();

    // sections that do not belong to the chosen kind
    if let Some(kind) = kind {
        for name in ["cat", "born", "flow", "spectrum", "sweep"] {
            if root.contains_key(name) && name != section_of(kind) {
                errors.push(ValidationError { field: name.into(), message: format!("section is not used by kind '{kind}'") });
            }
        }
    }

    let output_table = section(&root, "output", &mut errors);
    let mut out = Reader::new("output", output_table, &mut errors);
    let dir = out.path_value("dir", base);
    let format = out.choice("format", OutputFormat::Csv, &[("csv", OutputFormat::Csv), ("json", OutputFormat::Json)]);
    let plot_data = out.boolean("plot_data", false);
    out.finish();
    let dir = overrides.out.clone().or(dir).unwrap_or_else(|| PathBuf::from("out"));
    let format = overrides.format.or(format);

    let scenario = kind.and_then(|kind| {
        let name = section_of(kind);
        let table = section(&root, name, &mut errors);
        let mut r = Reader::new(name, table, &mut errors);
        let s = match kind {
            "cat" => read_cat(&mut r),
            "born" => read_born(&mut r, base),
            "flow" => read_flow(&mut r, base),
            "spectrum" => read_spectrum(&mut r, base),
            _ => read_sweep(&mut r),
        };
        r.finish();
        s
    });

    match (errors.is_empty(), seed, scenario, format) {
        (true, Some(seed), Some(scenario), Some(format)) => Ok(ScenarioConfig {
            seed,
            self_check,
            scenario,
            output: OutputConfig { dir, format, plot_data },
        }),
        _ => Err(errors),
    }
}

fn read_cat(r: &mut Reader<'_>) -> Option<Scenario> {
    let n = r.count("n", Some(16), 1);
    let p_live = r.real_in("p_live", Some(0.6), 0.0, 1.0, "[0, 1]");
    let phases = r.choice(
        "phases",
        PhaseModel::Grid,
        &[("grid", PhaseModel::Grid), ("uniform", PhaseModel::Uniform), ("zero", PhaseModel::Zero)],
    );
    let export_density = r.boolean("export_density", false);
    if let (true, Some(n)) = (export_density, n) {
        if n > MAX_DENSITY_EXPORT as u64 {
            r.error("export_density", format!("needs n ≤ {MAX_DENSITY_EXPORT}, got n = {n}"));
        }
    }
    Some(Scenario::Cat(CatConfig { n: n? as usize, p_live: p_live?, phases: phases?, export_density }))
}

fn read_born(r: &mut Reader<'_>, base: Option<&Path>) -> Option<Scenario> {
    let n = r.count("n", Some(100_000), 1);
    let samples = r.count("samples", Some(1_000_000), 1);
    let steps = r.count("steps", Some(1000), 0);
    let p_live = r.real_in("p_live", Some(0.6), 0.0, 1.0, "[0, 1]");
    let exhaustive = r.boolean("exhaustive", false);
    let permutation_file = r.path_value("permutation_file", base);
    let labeling_file = r.path_value("labeling_file", base);
    if let (true, Some(n), None) = (exhaustive, n, &permutation_file) {
        if n > MAX_EXHAUSTIVE as u64 {
            r.error("exhaustive", format!("needs n ≤ {MAX_EXHAUSTIVE}, got n = {n}"));
        }
    }
    Some(Scenario::Born(BornConfig {
        n: n? as usize,
        samples: samples?,
        steps: steps?,
        p_live: p_live?,
        exhaustive,
        permutation_file,
        labeling_file,
    }))
}

fn read_flow(r: &mut Reader<'_>, base: Option<&Path>) -> Option<Scenario> {
    use ontic_core::flow::DerivativeScheme;
    let grid_points = r.count("grid_points", Some(256), 8);
    let length = r.positive("length", Some(1.0));
    let offset = r.real("offset", Some(0.3));
    let amplitude = r.real("amplitude", Some(0.1));
    let field_csv = r.path_value("field_csv", base);
    let center = r.real("center", Some(0.0));
    let sigma_cells = r.real("sigma_cells", Some(8.0));
    let sigma_cells = match sigma_cells {
        Some(s) if s < 2.0 => {
            r.error("sigma_cells", format!("must be at least 2, got {s}"));
            None
        }
        s => s,
    };
    let has_time = r.table.is_some_and(|t| t.contains_key("horizon"));
    let has_traversal = r.table.is_some_and(|t| t.contains_key("traversal"));
    let horizon = match (has_time, has_traversal) {
        (true, true) => {
            r.error("horizon", "give either horizon or traversal, not both");
            r.used.extend(["horizon", "traversal"]);
            None
        }
        (true, false) => r.real("horizon", None).and_then(|t| {
            if t < 0.0 {
                r.error("horizon", format!("must be non-negative, got {t}"));
                None
            } else {
                Some(Horizon::Time(t))
            }
        }),
        (false, _) => r.real_in("traversal", Some(0.25), 0.0, 1.0, "[0, 1]").map(Horizon::Traversal),
    };
    let steps = r.count("steps", Some(50), 1);
    let derivative = r.choice(
        "derivative",
        DerivativeScheme::Spectral,
        &[("spectral", DerivativeScheme::Spectral), ("central", DerivativeScheme::CentralDifference)],
    );
    Some(Scenario::Flow(FlowConfig {
        grid_points: grid_points? as usize,
        length: length?,
        offset: offset?,
        amplitude: amplitude?,
        field_csv,
        center: center?,
        sigma_cells: sigma_cells?,
        horizon: horizon?,
        steps: steps? as usize,
        derivative: derivative?,
    }))
}

fn read_spectrum(r: &mut Reader<'_>, base: Option<&Path>) -> Option<Scenario> {
    let n = r.count("n", Some(8), 1);
    let permutation = r.choice(
        "permutation",
        PermutationSource::Random,
        &[
            ("identity", PermutationSource::Identity),
            ("random", PermutationSource::Random),
            ("cycle", PermutationSource::Cycle),
        ],
    );
    let permutation_file = r.path_value("permutation_file", base);
    let has_state = r.table.is_some_and(|t| t.contains_key("evolve_state"));
    let evolve_state = if has_state { r.count("evolve_state", None, 0).map(|k| k as usize) } else { None };
    let evolve_time = r.real("evolve_time", Some(1.0));
    if let (Some(n), Some(k), None) = (n, evolve_state, &permutation_file) {
        if k as u64 >= n {
            r.error("evolve_state", format!("must be below n = {n}, got {k}"));
        }
    }
    Some(Scenario::Spectrum(SpectrumConfig {
        n: n? as usize,
        permutation: permutation?,
        permutation_file,
        evolve_state,
        evolve_time: evolve_time?,
    }))
}

fn read_sweep(r: &mut Reader<'_>) -> Option<Scenario> {
    let sizes = match r.raw("sizes") {
        None => Some(vec![100, 1000, 10_000, 100_000]),
        Some(Value::Array(items)) => {
            let parsed: Option<Vec<usize>> =
                items.iter().map(|v| v.as_integer().filter(|&i| i >= 1).map(|i| i as usize)).collect();
            match parsed {
                Some(v) if !v.is_empty() => Some(v),
                _ => {
                    r.error("sizes", "must be a non-empty array of positive integers");
                    None
                }
            }
        }
        Some(other) => {
            let t = other.type_str();
            r.error("sizes", format!("expected an array, found {t}"));
            None
        }
    };
    let seeds = r.count("seeds", Some(200), 1);
    let p_live = r.real_in("p_live", Some(0.6), 0.0, 1.0, "[0, 1]");
    Some(Scenario::SuppressionSweep(SweepConfig { sizes: sizes?, seeds: seeds?, p_live: p_live? }))
}
