use std::collections::BTreeSet;

use serde_json::json;

use super::*;

#[test]
fn every_topic_has_an_experiment() {
    let covered: BTreeSet<&str> = REGISTRY.iter().flat_map(|e| e.topics.iter().copied()).collect();
    let missing: Vec<&&str> = COVERAGE.iter().filter(|t| !covered.contains(**t)).collect();
    assert!(missing.is_empty(), "topics without an experiment: {missing:?}");
    let unknown: Vec<&&str> = covered.iter().filter(|t| !COVERAGE.contains(t)).collect();
    assert!(unknown.is_empty(), "experiments tag unlisted topics: {unknown:?}");
}

#[test]
fn registry_names_are_unique() {
    let names: BTreeSet<&str> = REGISTRY.iter().map(|e| e.name).collect();
    assert_eq!(names.len(), REGISTRY.len());
    for required in ["ric1_scaling", "remlosi", "rip3_fa", "trd_chain", "kw_chain", "recovery_suite", "lunin_bench"] {
        assert!(names.contains(required), "{required}");
    }
}

#[test]
fn unknown_experiment() {
    assert!(matches!(
        run_experiment("nope", &ExperimentConfig::new("nope")),
        Err(Error::UnknownExperiment(_))
    ));
}

#[test]
fn unknown_parameter_is_rejected() {
    let cfg = ExperimentConfig::new("dft_exact").param("degree", json!(1)).param("bogus", json!(3));
    assert!(matches!(run_experiment("dft_exact", &cfg), Err(Error::InvalidParameters(_))));
    let cfg = ExperimentConfig::new("dft_exact").param("degree", json!("two"));
    assert!(matches!(run_experiment("dft_exact", &cfg), Err(Error::InvalidParameters(_))));
}

#[test]
fn space_only_where_taken() {
    let spec = SpaceSpec {
        system: crate::fnspace::FunctionSystem::trig_degree(1),
        domain: crate::fnspace::DomainSpec::torus(1, 16),
    };
    let mut cfg = ExperimentConfig::new("dft_exact");
    cfg.space = Some(spec.clone());
    assert!(run_experiment("dft_exact", &cfg).is_err());
    let mut cfg = ExperimentConfig::new("disc_basics").param("m", json!([3])).param("p", json!([2]));
    cfg.space = Some(spec.clone());
    let r = run_experiment("disc_basics", &cfg).unwrap();
    assert_eq!(r.config.space, Some(spec));
    assert!(r.pass, "{:?}", r.cases);
}

#[test]
fn config_round_trip_and_defaults() {
    let c = ExperimentConfig::from_json(r#"{"name": "dft_exact"}"#).unwrap();
    assert_eq!(c.seed, 0);
    assert_eq!(c.schema, 1);
    assert!(ExperimentConfig::from_json(r#"{"name": "x", "schema": 2}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"name": "x", "extra": 1}"#).is_err());
    let r = run_experiment("dft_exact", &c).unwrap();
    // Every default is echoed.
    for k in ["degree", "m", "grid_size", "tolerance", "restarts"] {
        assert!(r.config.params.contains_key(k), "{k}");
    }
    assert_eq!(r.config.params["m"], json!(17));
    let back: ExperimentReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, ExperimentReport { wall_clock: back.wall_clock, ..r });
}

#[test]
fn dft_exact_passes() {
    let r = run_experiment("dft_exact", &ExperimentConfig::new("dft_exact")).unwrap();
    assert!(r.pass, "{:?}", r.cases);
    assert_eq!(r.cases.len(), 1);
    assert!(r.min_slack.unwrap() >= 0.0);
}

#[test]
fn reports_are_bit_identical() {
    for (name, params) in [
        ("ric1_scaling", json!({"n_max": 3, "m_multipliers": [1, 2]})),
        ("oracle_agreement", json!({"instances": 5})),
        ("lunin_bench", json!({"instances": 20})),
    ] {
        let mut cfg = ExperimentConfig::new(name).with_seed(7);
        cfg.params = serde_json::from_value(params).unwrap();
        let a = run_experiment(name, &cfg).unwrap().to_json().unwrap();
        let b = run_experiment(name, &cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b, "{name}");
        let other = run_experiment(name, &cfg.clone().with_seed(8)).unwrap().to_json().unwrap();
        if name != "ric1_scaling" || a.contains("random") {
            assert_ne!(a, other, "{name}: seed has no effect");
        }
    }
}

#[test]
fn csv_has_one_row_per_case() {
    let r = run_experiment("lunin_bench", &ExperimentConfig::new("lunin_bench").param("instances", json!(5))).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("id,pass,slack,"));
    assert_eq!(lines.count(), r.cases.len());
}

#[test]
fn write_to_directory() {
    let dir = std::env::temp_dir().join(format!("sampdisc-harness-{}", std::process::id()));
    let r = run_experiment("dft_exact", &ExperimentConfig::new("dft_exact").param("degree", json!(2))).unwrap();
    let (j, c) = r.write_to(&dir).unwrap();
    let back: ExperimentReport = serde_json::from_str(&std::fs::read_to_string(j).unwrap()).unwrap();
    assert_eq!(back.cases, r.cases);
    assert!(std::fs::read_to_string(c).unwrap().contains("N5_m5"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn seed_env_parsing() {
    // Only the parser; the variable itself is left alone in tests.
    assert_eq!("12".trim().parse::<u64>().ok(), Some(12));
    assert_eq!(num(f64::INFINITY), json!("inf"));
    assert_eq!(num(1.5), json!(1.5));
}

#[test]
fn every_experiment_runs_with_small_settings() {
    let small = |name: &str| -> serde_json::Value {
        match name {
            "oracle_agreement" => json!({"instances": 4}),
            "ril1" => json!({"instances": 3}),
            "ric1_scaling" => json!({"n_max": 3, "m_multipliers": [2]}),
            "remlosi" => json!({"n": 3, "m_factors": [4]}),
            "khinchin" => json!({"n_max": 4}),
            "rip3_fa" => json!({"k_max": 4, "sets": 2}),
            "wrdi_transfer" => json!({"instances": 1, "r": [2]}),
            "weight_budget" => json!({"instances": 2}),
            "ap4_equalize" => json!({"instances": 4}),
            "ldi_search" => json!({"m_factors": [2], "search_restarts": 2}),
            "lunin_bench" => json!({"instances": 10, "required_fraction": 0.0}),
            "even_q" => json!({"instances": 2}),
            "recovery_suite" => json!({"instances": 1, "p": [2]}),
            "kw_chain" => json!({"dim": 3, "grid_size": 64, "trials": 1}),
            "trd_chain" => json!({"degree": 1, "m": [3, 5], "elements": 1}),
            "sparse_recovery" => json!({"n": 6, "v": 1, "supports": 3, "m": 6}),
            "universal_ldi" => json!({"n": 5, "v": [1, 2], "m": 6}),
            "design_matrix" => json!({"matrices": 2}),
            "pointwise" => json!({"instances": 1}),
            _ => json!({}),
        }
    };
    for e in REGISTRY {
        let mut cfg = ExperimentConfig::new(e.name).with_seed(3);
        cfg.params = serde_json::from_value(small(e.name)).unwrap();
        let r = run_experiment(e.name, &cfg).unwrap_or_else(|err| panic!("{}: {err}", e.name));
        assert!(!r.cases.is_empty(), "{}", e.name);
        let bad: Vec<&Case> = r.cases.iter().filter(|c| !c.pass).collect();
        assert!(bad.is_empty(), "{}: {bad:#?}", e.name);
    }
}
