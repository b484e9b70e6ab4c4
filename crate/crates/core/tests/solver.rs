use approx::assert_relative_eq;
use preempt_aoi::renewal::always_skip_moments;
use preempt_aoi::solver::*;
use preempt_aoi::*;
use proptest::prelude::*;

fn uniform(d: u32, p: f64, delta_max: u32) -> UniformModel {
    UniformModel::new(UniformParams::new(d, p, delta_max).unwrap()).unwrap()
}

fn nonuniform(sizes: &str, p: f64, delta_max: u32) -> NonUniformModel {
    NonUniformModel::new(NonUniformParams::new(p, sizes.parse().unwrap(), delta_max).unwrap())
        .unwrap()
}

fn always_skip(model: &UniformModel) -> PolicyTable {
    PolicyTable::from_fn(model, |s| if s.is_idle() { Action::Switch } else { Action::Skip })
}

#[test]
fn evaluation_is_consistent_with_the_solver() {
    for (d, p) in [(3, 0.3), (5, 0.1), (10, 0.07)] {
        let model = uniform(d, p, 600);
        let sol = relative_value_iteration(&model, 20_000, 1e-9).unwrap();
        let opt = evaluate_policy(&model, &sol.policy, 20_000, 1e-9).unwrap();
        assert_relative_eq!(opt.gain, sol.gain(), max_relative = 1e-8);

        let skip = evaluate_policy(&model, &always_skip(&model), 20_000, 1e-9).unwrap();
        let oracle = always_skip_moments(p, d).unwrap().avg_aoi();
        assert_relative_eq!(skip.gain, oracle, max_relative = 1e-6);

        let switch = PolicyTable::from_fn(&model, |_| Action::Switch);
        let switch = evaluate_policy(&model, &switch, 20_000, 1e-9).unwrap();
        assert!(switch.gain >= opt.gain - 1e-9);
        assert!(skip.gain >= opt.gain - 1e-9);
    }
}

#[test]
fn discounted_gain_approaches_average_gain() {
    let model = uniform(5, 0.2, 200);
    let rvi = relative_value_iteration(&model, 20_000, 1e-9).unwrap();
    let disc = discounted_value_iteration(&model, 0.999, 200_000, 1e-6).unwrap();
    assert!(disc.values.converged);
    assert!((disc.gain() - rvi.gain()).abs() / rvi.gain() < 0.02);
}

#[test]
fn discounted_values_are_monotone() {
    let model = nonuniform("5:0.5,8:0.5", 0.14, 120);
    for alpha in [0.9, 0.99, 0.999] {
        let sol = discounted_value_iteration(&model, alpha, 200_000, 1e-7).unwrap();
        assert!(sol.values.converged);
        let report = check_value_monotonicity(&model, &sol.values.values, 1e-6);
        assert_eq!(report, ValueMonotonicity::default(), "alpha = {alpha}");
    }
}

#[test]
fn structured_matches_plain_on_small_instances() {
    for (d, p) in [(2, 0.5), (3, 0.25), (4, 0.05), (6, 0.15)] {
        let model = uniform(d, p, 150);
        let plain = relative_value_iteration(&model, 50_000, 1e-9).unwrap();
        let structured = structured_vi_uniform(&model, 50_000, 1e-9).unwrap();
        assert_eq!(plain.policy, structured.policy, "d={d} p={p}");
        assert_relative_eq!(plain.gain(), structured.gain(), epsilon = 1e-8);
        assert!(structured.shortcut_hits > 0);
        assert_eq!(check_uniform_structure(&model, &plain.policy).total(), 0);
    }
    for (sizes, p) in [("2:0.5,3:0.5", 0.3), ("3:0.2,7:0.8", 0.1), ("4:0.3,6:0.3,9:0.4", 0.2)] {
        let model = nonuniform(sizes, p, 120);
        let plain = relative_value_iteration(&model, 50_000, 1e-9).unwrap();
        let structured = structured_vi_nonuniform(&model, 50_000, 1e-9).unwrap();
        assert_eq!(plain.policy, structured.policy, "{sizes} p={p}");
        assert_relative_eq!(plain.gain(), structured.gain(), epsilon = 1e-8);
        assert_eq!(check_nonuniform_structure(&model, &plain.policy).total(), 0, "{sizes}");
    }
}

#[test]
fn five_eight_examples() {
    let model = nonuniform("5:0.5,8:0.5", 0.14, 300);
    let sol = structured_vi_nonuniform(&model, 10_000, 1e-8).unwrap();
    let at = |s| sol.policy.lookup(&model, &s).unwrap();
    for delta in [5, 20, 300] {
        assert_eq!(at(NonUniformState::new(delta, 0, 0, 5)), Action::Switch);
        assert_eq!(at(NonUniformState::new(delta, 7, 8, 5)), Action::Switch);
    }
    // reachable (c = 5, b = 8) states skip
    for delta in 9..300 {
        for l in 1..5 {
            if delta >= 5 + 5 - l {
                assert_eq!(at(NonUniformState::new(delta, l, 5, 8)), Action::Skip);
            }
        }
    }
}

#[test]
fn thresholds_are_monotone_across_a_grid() {
    for d in [3, 4, 6] {
        for p in [0.02, 0.08, 0.2, 0.4] {
            let model = uniform(d, p, 500);
            let sol = structured_vi_uniform(&model, 20_000, 1e-8).unwrap();
            let taus = extract_thresholds(&model, &sol.policy).unwrap();
            for i in 1..=taus.k() {
                assert!(taus.tau(i).unwrap() >= i);
            }
        }
    }
}

#[test]
fn non_convergence_is_reported() {
    let model = uniform(10, 0.07, 1000);
    let sol = relative_value_iteration(&model, 5, 1e-8).unwrap();
    assert!(!sol.values.converged);
    assert_eq!(sol.values.iterations_run, 5);
    assert!(matches!(sol.ensure_converged(1e-8), Err(SolverError::NotConverged { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_policy_is_optimal_among_neighbours(d in 2u32..5, p in 0.05f64..0.9) {
        let model = uniform(d, p, 40);
        let sol = relative_value_iteration(&model, 100_000, 1e-10).unwrap();
        let gain = evaluate_policy(&model, &sol.policy, 100_000, 1e-10).unwrap().gain;
        // flipping any single arrival-state action cannot help
        for delta in d..(3 * d).min(40) {
            for u in 1..d {
                let mut actions = sol.policy.actions().to_vec();
                let i = model.arrival_index(delta, u);
                actions[i] = if actions[i].is_switch() { Action::Skip } else { Action::Switch };
                let other = evaluate_policy(&model, &PolicyTable::new(actions), 100_000, 1e-10).unwrap();
                prop_assert!(other.gain >= gain - 1e-7);
            }
        }
    }
}
