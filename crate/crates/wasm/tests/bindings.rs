use preempt_aoi_wasm::*;
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn uniform_view() {
    let v = parse(uniform_policy_json(10, 0.08, 40));
    assert_eq!(v["thresholds"], serde_json::json!([9, 8, 7, 6]));
    assert!(v["gain"].as_f64().unwrap() < v["always_skip_aoi"].as_f64().unwrap());
    let map = v["map"].as_array().unwrap();
    assert_eq!(map.len(), 31 * 10);
    assert!(map.iter().filter(|c| c["u"] == 0).all(|c| c["action"] == 1));
    assert!(!v["epoch_map"].as_array().unwrap().is_empty());
}

#[test]
fn nonuniform_view() {
    let v = parse(nonuniform_policy_json("5:0.5,8:0.5", 0.14, 30));
    assert_eq!(v["support"], serde_json::json!([5, 8]));
    for k in ["a_smaller_arrival", "b_short_arrival", "c_larger_in_service", "d_idle", "e_delta_monotone"] {
        assert_eq!(v["structure"][k], 0, "{k}");
    }
    let map = v["map"].as_array().unwrap();
    assert!(map
        .iter()
        .filter(|c| c["c"] == 5 && c["b"] == 8 && c["reachable"] == true)
        .all(|c| c["action"] == 0));
}

#[test]
fn trace_view() {
    let v = parse(simulate_json(5, 0.2, "optimal", 3, 10_000));
    assert_eq!(v["policy"], "uniform");
    assert_eq!(v["trace"].as_array().unwrap().len(), MAX_TRACE as usize);
    let aoi = v["time_avg_aoi"].as_f64().unwrap();
    let skip = parse(simulate_json(5, 0.2, "always_skip", 3, 10_000));
    assert_eq!(skip["arrivals"], v["arrivals"]);
    assert!(aoi > 5.0);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(simulate_json(5, 0.2, "greedy", 1, 100).is_err());
    assert!(simulate_json(5, 0.2, "optimal", 1, 0).is_err());
    assert!(uniform_policy_json(0, 0.2, 10).is_err());
    assert!(nonuniform_policy_json("5:0.7,8:0.7", 0.2, 10).is_err());
}
