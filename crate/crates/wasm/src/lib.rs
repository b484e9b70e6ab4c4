//! Browser entry points. Each returns a JSON string; the `*_json` functions
//! hold the logic and are usable natively.

use preempt_aoi::experiment::{
    epoch_policy_map, nonuniform_policy_map, optimal_nonuniform, optimal_uniform, uniform_policy_map,
    EpochMapCell, NonUniformMapCell, UniformMapCell,
};
use preempt_aoi::solver::{check_nonuniform_structure, extract_thresholds, NonUniformStructure};
use preempt_aoi::*;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Truncation used by the demo; small enough to solve interactively.
pub const DEMO_DELTA_MAX: u32 = 400;
pub const MAX_TRACE: u64 = 2_000;
pub const MAX_HORIZON: u64 = 1_000_000;

#[derive(Serialize)]
pub struct UniformView {
    pub gain: f64,
    pub iterations: usize,
    pub thresholds: Vec<u32>,
    pub always_skip_aoi: f64,
    pub map: Vec<UniformMapCell>,
    pub epoch_map: Vec<EpochMapCell>,
}

#[derive(Serialize)]
pub struct NonUniformView {
    pub gain: f64,
    pub iterations: usize,
    pub support: Vec<u32>,
    pub structure: NonUniformStructure,
    pub map: Vec<NonUniformMapCell>,
}

#[derive(Serialize)]
pub struct TraceView {
    pub policy: &'static str,
    pub time_avg_aoi: f64,
    pub std_error: Option<f64>,
    pub delivered: u64,
    pub arrivals: u64,
    pub switches: u64,
    pub trace: Vec<TraceRow>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(err)
}

pub fn uniform_policy_json(d: u32, p: f64, delta_hi: u32) -> Result<String, String> {
    let params = UniformParams::new(d, p, DEMO_DELTA_MAX).map_err(err)?;
    let model = UniformModel::new(params).map_err(err)?;
    let (_, sol) = optimal_uniform(params, DEFAULT_MAX_ITERS, DEFAULT_TOL).map_err(err)?;
    let taus = extract_thresholds(&model, &sol.policy).map_err(err)?;
    let always_skip_aoi = preempt_aoi::renewal::always_skip_moments(p, d).map_err(err)?.avg_aoi();
    to_json(&UniformView {
        gain: sol.gain(),
        iterations: sol.values.iterations_run,
        thresholds: taus.taus().to_vec(),
        always_skip_aoi,
        map: uniform_policy_map(&model, &sol.policy, delta_hi),
        epoch_map: epoch_policy_map(&model, &sol.policy, delta_hi.saturating_sub(d)),
    })
}

pub fn nonuniform_policy_json(sizes: &str, p: f64, delta_hi: u32) -> Result<String, String> {
    let sizes: SizeDistribution = sizes.parse().map_err(err)?;
    let params = NonUniformParams::new(p, sizes.clone(), DEMO_DELTA_MAX).map_err(err)?;
    let model = NonUniformModel::new(params.clone()).map_err(err)?;
    let (_, sol) = optimal_nonuniform(params, DEFAULT_MAX_ITERS, DEFAULT_TOL).map_err(err)?;
    to_json(&NonUniformView {
        gain: sol.gain(),
        iterations: sol.values.iterations_run,
        support: sizes.support().to_vec(),
        structure: check_nonuniform_structure(&model, &sol.policy),
        map: nonuniform_policy_map(&model, &sol.policy, delta_hi),
    })
}

/// `policy` is `optimal`, `always_skip` or `always_switch`. Statistics cover
/// `horizon` slots; only the first `MAX_TRACE` trace rows are returned.
pub fn simulate_json(d: u32, p: f64, policy: &str, seed: u64, horizon: u64) -> Result<String, String> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(format!("horizon must be in 1..={MAX_HORIZON}"));
    }
    let kind = match policy {
        "optimal" => {
            let params = UniformParams::new(d, p, DEMO_DELTA_MAX).map_err(err)?;
            optimal_uniform(params, DEFAULT_MAX_ITERS, DEFAULT_TOL).map_err(err)?.0
        }
        "always_skip" => PolicyKind::AlwaysSkip,
        "always_switch" => PolicyKind::AlwaysSwitch,
        other => return Err(format!("unknown policy {other:?}")),
    };
    let cfg = SimConfig { horizon, seed, p, sizes: Sizes::Constant(d), record_trace: true };
    let stats = simulate(&kind, &cfg).map_err(err)?;
    let mut trace = stats.trace.unwrap_or_default();
    trace.truncate(MAX_TRACE as usize);
    to_json(&TraceView {
        policy: kind.name(),
        time_avg_aoi: stats.time_avg_aoi,
        std_error: stats.std_error,
        delivered: stats.delivered,
        arrivals: stats.arrivals,
        switches: stats.switches,
        trace,
    })
}

#[wasm_bindgen(js_name = uniformPolicy)]
pub fn uniform_policy(d: u32, p: f64, delta_hi: u32) -> Result<String, JsError> {
    uniform_policy_json(d, p, delta_hi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = nonuniformPolicy)]
pub fn nonuniform_policy(sizes: &str, p: f64, delta_hi: u32) -> Result<String, JsError> {
    nonuniform_policy_json(sizes, p, delta_hi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulateTrace)]
pub fn simulate_trace(d: u32, p: f64, policy: &str, seed: u64, horizon: u64) -> Result<String, JsError> {
    simulate_json(d, p, policy, seed, horizon).map_err(|e| JsError::new(&e))
}
