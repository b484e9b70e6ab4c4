use preempt_aoi::experiment::{optimal_nonuniform, optimal_uniform};
use preempt_aoi::simulator::{check_trajectory, paired_std_error};
use preempt_aoi::solver::{evaluate_policy, extract_thresholds};
use preempt_aoi::*;

/// Builds a trace for constant size `d` under always-switch with arrivals at
/// the given slots.
fn switch_trace(d: u32, arrivals: &[u64], horizon: u64) -> Vec<TraceRow> {
    let (mut delta, mut l) = (d as u64, 0u32);
    let mut rows = Vec::new();
    for t in 0..horizon {
        let b = if arrivals.contains(&t) { d } else { 0 };
        let (c, u_or_l) = if l > 0 { (d, d - l) } else { (0, 0) };
        let action = if b != 0 { Action::Switch } else { Action::Skip };
        if b != 0 {
            l = d;
        }
        let delivered = l == 1;
        rows.push(TraceRow { t, delta, u_or_l, c, b, action, delivered });
        l = l.saturating_sub(1);
        delta = if delivered { d as u64 } else { delta + 1 };
    }
    rows
}

#[test]
fn sample_path_epochs() {
    // preemption at t = 4, deliveries at the end of slots 6 and 11
    let trace = switch_trace(3, &[2, 4, 9], 14);
    let delivered: Vec<u64> = trace.iter().filter(|r| r.delivered).map(|r| r.t + 1).collect();
    assert_eq!(delivered, [7, 12]);
    let epochs = epoch_decompose(&trace);
    let lengths: Vec<u64> = epochs.iter().map(|e| e.length).collect();
    assert_eq!(lengths, [7, 5]);
    for e in &epochs {
        assert_eq!(e.aoi_sum, e.expected_aoi_sum());
    }
}

#[test]
fn single_epoch_sum() {
    for d in 1..8u32 {
        let trace = switch_trace(d, &[0], d as u64);
        let epochs = epoch_decompose(&trace);
        assert_eq!(epochs.len(), 1);
        let d = d as u64;
        assert_eq!(epochs[0].length, d);
        assert_eq!(epochs[0].aoi_sum, d * d + d * (d - 1) / 2);
    }
}

#[test]
fn empty_trace() {
    assert!(epoch_decompose(&[]).is_empty());
}

#[test]
fn simulated_trace_matches_hand_built_dynamics() {
    let cfg = SimConfig { horizon: 400, seed: 4, p: 0.3, sizes: Sizes::Constant(3), record_trace: true };
    let stats = simulate(&PolicyKind::AlwaysSwitch, &cfg).unwrap();
    let trace = stats.trace.unwrap();
    let arrivals: Vec<u64> = trace.iter().filter(|r| r.b != 0).map(|r| r.t).collect();
    assert_eq!(trace, switch_trace(3, &arrivals, 400));
}

fn sim(policy: &PolicyKind, p: f64, sizes: Sizes, horizon: u64, seed: u64, trace: bool) -> SimStats {
    let cfg = SimConfig { horizon, seed, p, sizes, record_trace: trace };
    simulate(policy, &cfg).unwrap()
}

#[test]
fn monte_carlo_matches_uniform_gain() {
    let params = UniformParams::new(10, 0.07, 1000).unwrap();
    let (policy, sol) = optimal_uniform(params, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
    let stats = sim(&policy, 0.07, Sizes::Constant(10), 1_000_000, 11, false);
    let rel = (stats.time_avg_aoi - sol.gain()).abs() / sol.gain();
    assert!(rel < 0.02, "sim {} vs J {}", stats.time_avg_aoi, sol.gain());
    let se = stats.std_error.unwrap();
    assert!((stats.time_avg_aoi - sol.gain()).abs() < 5.0 * se);
}

#[test]
fn monte_carlo_matches_nonuniform_gain() {
    let sizes: SizeDistribution = "5:0.5,8:0.5".parse().unwrap();
    let params = NonUniformParams::new(0.14, sizes.clone(), 400).unwrap();
    let model = NonUniformModel::new(params.clone()).unwrap();
    let (policy, sol) = optimal_nonuniform(params, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
    let stats = sim(&policy, 0.14, Sizes::Distribution(sizes.clone()), 1_000_000, 12, false);
    assert!((stats.time_avg_aoi - sol.gain()).abs() / sol.gain() < 0.02);

    let skip = PolicyTable::from_fn(&model, |s| if s.is_idle() { Action::Switch } else { Action::Skip });
    let exact = evaluate_policy(&model, &skip, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap().gain;
    let stats = sim(&PolicyKind::AlwaysSkip, 0.14, Sizes::Distribution(sizes), 1_000_000, 12, false);
    assert!((stats.time_avg_aoi - exact).abs() / exact < 0.02);
}

#[test]
fn threshold_and_tabular_trajectories_coincide() {
    for (d, p) in [(10, 0.07), (10, 0.08), (6, 0.15)] {
        let params = UniformParams::new(d, p, 2000).unwrap();
        let model = UniformModel::new(params).unwrap();
        let (tabular, sol) = optimal_uniform(params, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        let taus = extract_thresholds(&model, &sol.policy).unwrap();
        let threshold = PolicyKind::Threshold { taus, d };
        let a = sim(&tabular, p, Sizes::Constant(d), 200_000, 3, true);
        let b = sim(&threshold, p, Sizes::Constant(d), 200_000, 3, true);
        assert_eq!(a.trace, b.trace, "d={d} p={p}");
        let check = check_trajectory(a.trace.as_ref().unwrap());
        assert_eq!(check.ss_violations, 0);
        assert_eq!(check.idle_violations, 0);
    }
}

#[test]
fn common_random_numbers_shrink_paired_error() {
    let a = sim(&PolicyKind::AlwaysSkip, 0.05, Sizes::Constant(10), 200_000, 8, false);
    let b = sim(&PolicyKind::AlwaysSwitch, 0.05, Sizes::Constant(10), 200_000, 8, false);
    let paired = paired_std_error(&a, &b).unwrap();
    let independent = (a.std_error.unwrap().powi(2) + b.std_error.unwrap().powi(2)).sqrt();
    assert!(paired < independent);
    assert_eq!(a.arrivals, b.arrivals);
}

#[test]
fn trace_csv_has_the_expected_header() {
    let stats = sim(&PolicyKind::AlwaysSwitch, 0.3, Sizes::Constant(3), 20, 1, true);
    let mut buf = Vec::new();
    simulator::write_trace_csv(stats.trace.as_ref().unwrap(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,delta,u_or_l,c,b,action,delivered");
    assert_eq!(text.lines().count(), 21);
}
