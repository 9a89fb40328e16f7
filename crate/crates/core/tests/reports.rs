use qonsager::config::RunConfig;
use qonsager::report::to_json_string;
use qonsager::suites::{run_suite, Context, Suite};

fn quick() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.output.csv = false;
    cfg.output.timing = false;
    cfg.samples.points = 3;
    cfg.samples.max_total = 2;
    cfg.samples.coefficient_draws = 6;
    cfg.samples.duality_draws = 6;
    cfg.samples.ladder_points = 1;
    cfg.samples.ladder_max_total = 1;
    cfg.samples.ortho_nodes_n1 = 400;
    cfg.samples.ortho_nodes_n2 = 0;
    cfg
}

fn run_with_workers(suite: Suite, cfg: &RunConfig, workers: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    let ctx = Context::new(cfg.clone());
    let r = pool.install(|| run_suite(suite, &ctx)).unwrap();
    to_json_string(&r).unwrap()
}

fn schema() -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json");
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

#[test]
fn every_report_validates_against_schema() {
    let v = schema();
    let mut cfg = quick();
    for suite in Suite::ALL {
        let text = run_with_workers(suite, &cfg, 2);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let errors: Vec<String> = v.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", suite.name());
    }
    cfg.output.timing = true;
    let ctx = Context::new(cfg);
    let r = run_suite(Suite::VerifyOnsager, &ctx).unwrap();
    assert!(r.wall_time.is_some());
    let value = serde_json::from_str(&to_json_string(&r).unwrap()).unwrap();
    assert!(v.is_valid(&value));
}

#[test]
fn schema_rejects_malformed_reports() {
    let v = schema();
    let bad = serde_json::json!({ "suite": "verify-onsager", "params": {}, "checks": [{"name": "x"}], "passed": true, "wall_time": null });
    assert!(!v.is_valid(&bad));
    let bad = serde_json::json!({ "suite": "other", "params": {}, "checks": [], "passed": true, "wall_time": null });
    assert!(!v.is_valid(&bad));
}

#[test]
fn identical_across_runs_and_worker_counts() {
    let cfg = quick();
    for suite in [Suite::VerifyBispectral, Suite::LadderCheck, Suite::ClassicalCheck, Suite::OrthoCheck] {
        let a = run_with_workers(suite, &cfg, 1);
        let b = run_with_workers(suite, &cfg, 1);
        let c = run_with_workers(suite, &cfg, 3);
        assert_eq!(a, b, "{}", suite.name());
        assert_eq!(a, c, "{}", suite.name());
    }
}

#[test]
fn seed_changes_the_samples() {
    let cfg = quick();
    let mut other = cfg.clone();
    other.policy.rng_seed = 17;
    let a = run_with_workers(Suite::VerifyBispectral, &cfg, 1);
    let b = run_with_workers(Suite::VerifyBispectral, &other, 1);
    assert_ne!(a, b);
}

#[test]
fn floats_carry_seventeen_digits_and_keys_are_sorted() {
    let text = run_with_workers(Suite::VerifyOnsager, &quick(), 1);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(text.contains("\"q\":[6.9999999999999996e-1,0.0000000000000000e0]"));
}
