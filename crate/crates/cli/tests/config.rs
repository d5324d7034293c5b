use std::f64::consts::PI;

use pcqc_cli::config::*;

fn parse(text: &str) -> Result<Parsed, ConfigError> {
    parse_config_str(text, Vec::<(String, String)>::new(), None)
}

#[test]
fn empty_file_gives_chip_defaults() {
    let p = parse("").unwrap();
    assert_eq!(p.config, RunConfig::default());
    assert!(p.warnings.is_empty());
    let c = &p.config;
    assert_eq!(c.physical.lattice_a, 2.202e-3);
    assert_eq!(c.physical.v_b, 767.7);
    assert_eq!(c.physical.v_a, 987.0);
    assert_eq!(c.calibration.target_area_b, 9.0 * PI / 4.0);
    assert_eq!(c.calibration.target_area_a, 7.0 * PI / 4.0);
    assert_eq!(c.waveguide.zone_length * c.waveguide.zone_starts.len() as f64, 36.0);
}

#[test]
fn negative_velocity_names_field_and_line() {
    let err = parse("[physical]\nv_a = 987\nv_b = -1\n").unwrap_err();
    match &err {
        ConfigError::Range { field, origin, .. } => {
            assert_eq!(field, "physical.v_b");
            assert_eq!(*origin, Origin::Line(3));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("v_b"));
}

#[test]
fn type_mismatch_names_field() {
    let err = parse("[shots]\n\nseed = \"seven\"\n").unwrap_err();
    match err {
        ConfigError::Type { field, origin, .. } => {
            assert_eq!(field, "shots.seed");
            assert_eq!(origin, Origin::Line(3));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_keys_warn_and_continue() {
    let p = parse("[physical]\nv_b = 800\ncolour = 3\n[extras]\nx = 1\n").unwrap();
    assert_eq!(p.config.physical.v_b, 800.0);
    assert_eq!(p.warnings.len(), 2);
    assert!(p.warnings[1].contains("physical.colour") || p.warnings[0].contains("physical.colour"));
    assert!(p.warnings.iter().any(|w| w.contains("[extras]")));
}

#[test]
fn syntax_error_reports_line() {
    let err = parse("[physical]\nv_b = = 3\n").unwrap_err();
    assert!(matches!(&err, ConfigError::Syntax(m) if m.contains("line 2")), "{err}");
}

#[test]
fn environment_overrides_file() {
    let env = vec![
        ("PCQC_PHYSICAL_V_A".to_string(), "1000".to_string()),
        ("PCQC_SHOTS_ACCEPTED_PER_DELTA".to_string(), "77".to_string()),
        ("PCQC_READOUT_DELTAS".to_string(), "[-2e4, -1e4, 0, 1e4]".to_string()),
        ("PCQC_BOGUS_KEY".to_string(), "1".to_string()),
        ("HOME".to_string(), "/root".to_string()),
    ];
    let p = parse_config_str("[physical]\nv_a = 900\n", env, None).unwrap();
    assert_eq!(p.config.physical.v_a, 1000.0);
    assert_eq!(p.config.shots.accepted_per_delta, 77);
    assert_eq!(p.config.readout.detunings, DetuningChoice::Fixed(vec![-2e4, -1e4, 0.0, 1e4]));
    assert_eq!(p.warnings.len(), 1);
}

#[test]
fn environment_range_error_names_variable() {
    let env = vec![("PCQC_SHOTS_DETECTOR_EFFICIENCY".to_string(), "1.5".to_string())];
    match parse_config_str("", env, None).unwrap_err() {
        ConfigError::Range { field, origin, .. } => {
            assert_eq!(field, "shots.detector_efficiency");
            assert_eq!(origin, Origin::Env("PCQC_SHOTS_DETECTOR_EFFICIENCY".into()));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn file_model_requires_existing_file() {
    assert!(matches!(
        parse("[cavity]\nmodel = \"file\"\n").unwrap_err(),
        ConfigError::Missing { field, .. } if field == "cavity.file"
    ));
    assert!(matches!(
        parse("[cavity]\nmodel = \"file\"\nfile = \"/nonexistent/cavity.txt\"\n").unwrap_err(),
        ConfigError::Invalid { field, .. } if field == "cavity.file"
    ));
}

#[test]
fn relative_paths_resolve_against_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cav.txt"), "0 0\n1 1\n2 0\n").unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[cavity]\nmodel = \"file\"\nfile = \"cav.txt\"\n[output]\ndir = \"res\"\n").unwrap();
    let p = parse_config(&cfg).unwrap();
    assert_eq!(p.config.cavity.source, CavitySource::File(dir.path().join("cav.txt")));
    assert_eq!(p.config.output.dir, dir.path().join("res"));
}

#[test]
fn detunings_must_be_distinct() {
    assert!(matches!(
        parse("[readout]\ndeltas = [0, 1, 1, 2]\n").unwrap_err(),
        ConfigError::Invalid { field, origin: Origin::Line(2), .. } if field == "readout.deltas"
    ));
    let p = parse("[readout]\ndeltas = \"auto\"\n").unwrap();
    assert_eq!(p.config.readout.detunings, DetuningChoice::Auto);
}

#[test]
fn theta_outside_range_is_rejected() {
    assert!(matches!(
        parse("[input]\ntheta = 4.0\n").unwrap_err(),
        ConfigError::Range { field, .. } if field == "input.theta"
    ));
}
