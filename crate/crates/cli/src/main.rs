use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ontic_cli::config::OutputFormat;
use ontic_cli::{run_scenario, validate_config_with, Overrides, RunError, ScenarioConfig, ValidationError, VERSION};

const EXIT_INVALID: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_SELF_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "ontic", about = "Run deterministic-automaton scenarios from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario configuration (TOML).
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Table format; overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Worker threads (default: all cores). Outputs do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a configuration and print the resolved values.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Print the version.
    Version,
}

fn load(common: &Common) -> Result<ScenarioConfig, ExitCode> {
    let raw = match std::fs::read_to_string(&common.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            return Err(ExitCode::from(EXIT_RUNTIME));
        }
    };
    let overrides = Overrides {
        seed: common.seed,
        out: common.out.clone(),
        format: common.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }),
        base_dir: common.config.parent().map(Path::to_path_buf),
    };
    validate_config_with(&raw, &overrides).map_err(|errors| {
        report_invalid(&common.config, &errors);
        ExitCode::from(EXIT_INVALID)
    })
}

fn report_invalid(path: &Path, errors: &[ValidationError]) {
    eprintln!("{}: {} problem(s)", path.display(), errors.len());
    for e in errors {
        eprintln!("  {e}");
    }
}

fn run(cfg: &ScenarioConfig, threads: Option<usize>) -> ExitCode {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match pool.install(|| run_scenario(cfg)) {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("{}  {}", f.sha256, cfg.output.dir.join(&f.name).display());
            }
            for c in manifest.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} = {} (limit {})", c.name, c.value, c.limit);
            }
            if manifest.self_check_failed() {
                ExitCode::from(EXIT_SELF_CHECK)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(RunError::Invalid(errors)) => {
            report_invalid(Path::new("<config>"), &errors);
            ExitCode::from(EXIT_INVALID)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("ontic {VERSION}");
            ExitCode::SUCCESS
        }
        Command::Validate { common } => match load(&common) {
            Ok(cfg) => {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("serializable"));
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { common, threads } => match load(&common) {
            Ok(cfg) => run(&cfg, threads),
            Err(code) => code,
        },
    }
}
