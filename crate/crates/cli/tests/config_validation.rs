use ontic_cli::config::{OutputFormat, PermutationSource, Scenario, SpectrumConfig};
use ontic_cli::{validate_config, validate_config_with, Overrides};
use std::path::PathBuf;

#[test]
fn three_violations_give_three_errors() {
    let raw = r#"
kind = "cat"
seed = 3
[cat]
n = 0
p_live = -0.1
phases = "spiral"
"#;
    let errs = validate_config(raw).unwrap_err();
    let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
    assert_eq!(fields, ["cat.n", "cat.p_live", "cat.phases"], "{errs:?}");
}

#[test]
fn p_live_above_one_is_a_single_error() {
    let errs = validate_config("kind = \"born\"\nseed = 1\n[born]\np_live = 1.4\n").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].field, "born.p_live");
    assert!(errs[0].message.contains("[0, 1]") && errs[0].message.contains("1.4"));
}

#[test]
fn wrong_types_are_reported_per_field() {
    let errs = validate_config("kind = \"flow\"\nseed = \"one\"\n[flow]\nsteps = 2.5\nlength = true\n").unwrap_err();
    let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
    assert_eq!(fields, ["seed", "flow.length", "flow.steps"]);
}

#[test]
fn overrides_replace_file_values() {
    let raw = "kind = \"spectrum\"\nseed = 1\n[output]\ndir = \"a\"\nformat = \"csv\"\n";
    let o = Overrides {
        seed: Some(5),
        out: Some(PathBuf::from("/tmp/b")),
        format: Some(OutputFormat::Json),
        base_dir: None,
    };
    let cfg = validate_config_with(raw, &o).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.output.dir, PathBuf::from("/tmp/b"));
    assert_eq!(cfg.output.format, OutputFormat::Json);
}

#[test]
fn spectrum_defaults_and_state_bound() {
    let cfg = validate_config("kind = \"spectrum\"\nseed = 1\n").unwrap();
    assert_eq!(
        cfg.scenario,
        Scenario::Spectrum(SpectrumConfig {
            n: 8,
            permutation: PermutationSource::Random,
            permutation_file: None,
            evolve_state: None,
            evolve_time: 1.0,
        })
    );
    let errs = validate_config("kind = \"spectrum\"\nseed = 1\n[spectrum]\nn = 4\nevolve_state = 4\n").unwrap_err();
    assert_eq!(errs[0].field, "spectrum.evolve_state");
}

#[test]
fn exhaustive_and_export_limits() {
    let errs = validate_config("kind = \"born\"\nseed = 1\n[born]\nn = 2000000\nexhaustive = true\n").unwrap_err();
    assert_eq!(errs[0].field, "born.exhaustive");
    let errs = validate_config("kind = \"cat\"\nseed = 1\n[cat]\nn = 1000\nexport_density = true\n").unwrap_err();
    assert_eq!(errs[0].field, "cat.export_density");
}
