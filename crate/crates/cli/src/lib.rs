//! Batch front end for `ontic-core`: strict TOML scenario configs, a runner
//! that writes CSV/JSON artifacts atomically, and a manifest of SHA-256
//! digests for every file it emits.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{validate_config, validate_config_with, Overrides, ScenarioConfig, ValidationError};
pub use error::RunError;
pub use run::{run_scenario, RunManifest, MANIFEST_NAME, VERSION};
