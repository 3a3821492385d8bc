use pfcert::config::RunConfig;
use pfcert::verify::{self, Report};
use serde_json::Value;

fn strip_times(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_time_s");
            m.values_mut().for_each(strip_times);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_times),
        _ => {}
    }
}

fn report_with_threads(threads: usize) -> Value {
    let mut cfg = RunConfig::default();
    cfg.only = ["ccr", "norm_bounds", "leibniz", "ta_identity", "step2"].map(String::from).to_vec();
    let model = cfg.build().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let rep = pool.install(|| Report::new(&model, verify::run_checks(&model), None));
    let mut v: Value = serde_json::from_str(&rep.to_json()).unwrap();
    strip_times(&mut v);
    v
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let one = report_with_threads(1);
    let many = report_with_threads(4);
    assert_eq!(one, many);
    assert_eq!(one["summary"]["failed"], 0);
}

#[test]
fn report_embeds_the_resolved_config() {
    let mut cfg = RunConfig::default();
    cfg.only = vec!["kato".into()];
    cfg.seed = 7;
    let model = cfg.build().unwrap();
    let rep = Report::new(&model, verify::run_checks(&model), None);
    let v: Value = serde_json::from_str(&rep.to_json()).unwrap();
    let echoed = RunConfig::from_json(&v["config"].to_string()).unwrap();
    assert_eq!(echoed, cfg);
    assert!(rep.checks.iter().all(|c| c.family == "kato"));
}
