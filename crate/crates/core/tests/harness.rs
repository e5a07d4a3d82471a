use polydist_core::harness::{run, ExperimentConfig, OutputFormat, Scenario, Status, Tier};

fn small(scenario: Scenario) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(scenario);
    c.samples = 20_000;
    c.bootstrap = 20;
    c.estimator_calibration.cases = 3;
    c.estimator_calibration.tolerance = 0.1;
    c.estimator_calibration.floor_max = 0.1;
    c.bernoulli.instances = 6;
    c.bernoulli.thetas = 5;
    c.bernoulli.mc_draws = 10_000;
    c.shift.tolerance = 0.5;
    c.l1.draws = 500;
    c.l1.crosscheck_draws = 1;
    c.l1.crosscheck_budget = 2000;
    c.t1.n = 8;
    c.t1.calibration_samples = 20_000;
    c.t1.slope_tolerance = 1.0;
    c.t2.zeta = vec![0.1, 0.2, 0.4];
    c.t3.zeta = vec![0.1, 0.2, 0.4];
    c.invariance.draws = 20_000;
    c.invariance.n_values = vec![2, 4, 8, 16];
    c.invariance.slope_tolerance = 2.0;
    c.cf.samples = 20_000;
    c.cf.beta_tolerance = 0.5;
    c
}

#[test]
fn every_scenario_runs_at_small_budget() {
    for sc in Scenario::ALL {
        let report = run(&small(sc)).unwrap_or_else(|e| panic!("{}: {e}", sc.tag()));
        assert!(!report.checks.is_empty(), "{}", sc.tag());
        assert!(!report.tiers.is_empty(), "{}", sc.tag());
        for c in &report.checks {
            assert_eq!(c.margin, c.rhs - c.lhs);
            match c.tier {
                Tier::Asserted => assert_ne!(c.status, Status::Info),
                _ => assert_eq!(c.status, Status::Info),
            }
        }
        for b in &report.bounds {
            assert!(b.value.is_consistent(), "{} {}", sc.tag(), b.id);
        }
    }
}

#[test]
fn informational_scenarios_never_fail() {
    for sc in [Scenario::T2Scaling, Scenario::T3Scaling] {
        let r = run(&small(sc)).unwrap();
        assert_eq!(r.asserted().count(), 0);
        assert!(r.passed());
    }
}

#[test]
fn bernoulli_fixture_values() {
    let r = run(&small(Scenario::BernoulliTail)).unwrap();
    let c = r.find_check("fixture").unwrap();
    assert!((c.lhs - 0.3125).abs() < 1e-15);
    assert!((c.rhs - 12.0 * (-0.09f64 / 18.0).exp()).abs() < 1e-12);
    assert!(r.passed(), "{}", r.summary());
}

#[test]
fn same_seed_same_csv() {
    for sc in [Scenario::BernoulliTail, Scenario::Invariance, Scenario::T1Verify] {
        let a = run(&small(sc)).unwrap();
        let b = run(&small(sc)).unwrap();
        assert_eq!(a.checks_csv(), b.checks_csv());
        let ta: Vec<_> = a.tables.iter().map(|t| t.to_csv()).collect();
        let tb: Vec<_> = b.tables.iter().map(|t| t.to_csv()).collect();
        assert_eq!(ta, tb);
    }
}

#[test]
fn different_seed_different_estimates() {
    let mut c = small(Scenario::EstimatorCalibration);
    let a = run(&c).unwrap();
    c.seed = 2;
    let b = run(&c).unwrap();
    assert_ne!(a.checks_csv(), b.checks_csv());
}

#[test]
fn tight_tolerance_fails_run() {
    let mut c = small(Scenario::EstimatorCalibration);
    c.estimator_calibration.tolerance = 1e-12;
    let r = run(&c).unwrap();
    assert!(!r.passed());
    assert!(!r.failures().is_empty());
}

#[test]
fn invalid_config_rejected_before_running() {
    let mut c = small(Scenario::Invariance);
    c.invariance.n_values = vec![8, 16, 32];
    assert!(run(&c).is_err());
    let mut c = small(Scenario::CfDecay);
    c.samples = 10;
    assert!(run(&c).is_err());
}

#[test]
fn write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&small(Scenario::BernoulliTail)).unwrap();
    let files = r.write(dir.path(), OutputFormat::Structured).unwrap();
    let names: Vec<_> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_str().unwrap().to_string())
        .collect();
    assert!(names.contains(&"checks.csv".into()));
    assert!(names.contains(&"bernoulli.csv".into()));
    assert!(names.contains(&"report.json".into()));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["scenario"], "bernoulli-tail");
    assert!(json["checks"].as_array().unwrap().len() > 5);

    let dir = tempfile::tempdir().unwrap();
    let files = r.write(dir.path(), OutputFormat::Csv).unwrap();
    assert!(files.iter().all(|f| f.extension().unwrap() == "csv"));
}

#[test]
fn t1_records_calibrated_constant() {
    let r = run(&small(Scenario::T1Verify)).unwrap();
    let b = &r.bounds.iter().find(|b| b.id == "t1-upper-k1").unwrap().value;
    let c_d = b.constants.iter().find(|c| c.name == "C_d").unwrap();
    assert_eq!(c_d.source, polydist_core::bounds::ConstantSource::Calibrated);
    assert!(r.find_table("t1_ladder").is_some());
}

#[test]
fn gaussian_source_sits_at_noise_floor() {
    let mut c = small(Scenario::Invariance);
    c.invariance.law = polydist_core::randvec::ScalarLaw::standard_gaussian();
    let r = run(&c).unwrap();
    let floor = r.distances.iter().find(|d| d.id == "noise-floor").unwrap().value.value;
    for d in r.distances.iter().filter(|d| d.id.starts_with("tv-n")) {
        assert!(
            d.value.value <= 3.0 * floor,
            "{}: {} vs floor {floor}",
            d.id,
            d.value.value
        );
    }
}
