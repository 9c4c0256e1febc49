//! Configuration loading: defaults, unknown keys, overrides, echo
//! round-trips and semantic rejections.

use std::fs;

use fracsurf::config::{load_config, GermSpec, MapSpec, ScaleSpec};
use tempfile::tempdir;

fn write_cfg(contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, contents).unwrap();
    (dir, path)
}

#[test]
fn minimal_config_gets_documented_defaults() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1}, "germ": {"kind": "sin_product"}}"#,
    );
    let (cfg, _) = load_config(&path, &[]).unwrap();
    assert_eq!(cfg.x_partition.ratio, 0.5);
    assert_eq!(cfg.x_partition.truncation, 12);
    assert_eq!(cfg.scale, ScaleSpec::Constant { value: 0.3 });
    assert_eq!(cfg.parameter_map, MapSpec::CornerBilinear);
    assert_eq!(cfg.solve.lattice, 257);
    assert_eq!(cfg.solve.tol, 1e-10);
    assert_eq!(cfg.solve.max_iter, 200);
    assert_eq!(cfg.attractor.schedule, vec![(2, 2), (4, 4), (8, 8), (12, 12)]);
    assert_eq!(cfg.audit.lattice, 513);
    assert_eq!(cfg.audit.k_lattice, 512);
    assert_eq!(cfg.output.formats, vec!["csv".to_string(), "pgm".to_string()]);
    match cfg.germ {
        GermSpec::SinProduct { amplitude, .. } => assert_eq!(amplitude, 1.0),
        other => panic!("unexpected germ {other:?}"),
    }
}

#[test]
fn unknown_key_is_rejected_with_path() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1},
            "germ": {"kind": "sin_product"},
            "solve": {"lattice": 65, "typo_key": 3}}"#,
    );
    let err = load_config(&path, &[]).unwrap_err();
    assert_eq!(err.path, "solve.typo_key");
    assert!(err.message.contains("unknown key"));
}

#[test]
fn parse_error_reports_line_and_column() {
    let (_d, path) = write_cfg("{\n  \"domain\": }");
    let err = load_config(&path, &[]).unwrap_err();
    assert!(err.message.contains("line 2"), "{}", err.message);
}

#[test]
fn scale_sup_at_one_is_rejected() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1},
            "germ": {"kind": "sin_product"},
            "scale": {"kind": "constant", "value": 1.0}}"#,
    );
    let err = load_config(&path, &[]).unwrap_err();
    assert_eq!(err.path, "scale");
    assert!(err.message.contains("scale field must satisfy sup < 1"), "{}", err.message);
}

#[test]
fn overrides_are_reflected_in_echo() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1}, "germ": {"kind": "sin_product"}}"#,
    );
    let (cfg, echo) = load_config(&path, &["solve.tol=1e-6".to_string()]).unwrap();
    assert_eq!(cfg.solve.tol, 1e-6);
    assert_eq!(echo["solve"]["tol"].as_f64().unwrap(), 1e-6);
}

#[test]
fn echo_round_trips_to_the_same_effective_config() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 2, "c": -1, "d": 1},
            "germ": {"kind": "polynomial", "terms": [[1, 0, 1.0], [0, 1, 1.0]]},
            "scale": {"kind": "affine", "coeffs": [0.1, 0.05, -0.02]},
            "parameter_map": {"kind": "blend", "lambda": 0.25}}"#,
    );
    let (cfg, echo) = load_config(&path, &[]).unwrap();
    let dir = tempdir().unwrap();
    let echo_path = dir.path().join("echo.json");
    fs::write(&echo_path, format!("{echo:#}")).unwrap();
    let (cfg2, echo2) = load_config(&echo_path, &[]).unwrap();
    assert_eq!(cfg, cfg2);
    assert_eq!(echo, echo2);
}

#[test]
fn env_seed_overrides_config() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1},
            "germ": {"kind": "sin_product"},
            "attractor": {"seed": 7}}"#,
    );
    // Env-var tests share process state; set and clear carefully.
    std::env::set_var("FRACSURF_SEED", "4242");
    let result = load_config(&path, &[]);
    std::env::remove_var("FRACSURF_SEED");
    assert_eq!(result.unwrap().0.attractor.seed, 4242);
}

#[test]
fn schedule_beyond_truncation_is_rejected() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1},
            "germ": {"kind": "sin_product"},
            "attractor": {"schedule": [[2, 2], [16, 16]]}}"#,
    );
    let err = load_config(&path, &[]).unwrap_err();
    assert_eq!(err.path, "attractor.schedule[1]");
}

#[test]
fn bad_blend_lambda_is_rejected() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1},
            "germ": {"kind": "sin_product"},
            "parameter_map": {"kind": "blend", "lambda": 1.5}}"#,
    );
    let err = load_config(&path, &[]).unwrap_err();
    assert_eq!(err.path, "parameter_map.lambda");
}

#[test]
fn prefix_partition_accepted_and_monotonicity_enforced() {
    let (_d, path) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1},
            "germ": {"kind": "sin_product"},
            "x_partition": {"kind": "geometric", "ratio": 0.5,
                            "prefix": [0.0, 0.4, 0.6], "truncation": 10}}"#,
    );
    assert!(load_config(&path, &[]).is_ok());

    let (_d2, path2) = write_cfg(
        r#"{"domain": {"a": 0, "b": 1, "c": 0, "d": 1},
            "germ": {"kind": "sin_product"},
            "x_partition": {"kind": "geometric", "ratio": 0.5,
                            "prefix": [0.0, 0.3, 0.2], "truncation": 10}}"#,
    );
    let err = load_config(&path2, &[]).unwrap_err();
    assert!(err.message.contains("index 2"), "{}", err.message);
}
