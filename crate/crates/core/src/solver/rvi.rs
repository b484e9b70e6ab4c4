use crate::action::Action;
use crate::error::SolverError;
use crate::mdp::{Kernel, Mdp};
use crate::TIE_TOLERANCE;

use super::shortcuts::{NoShortcuts, SweepRule};
use super::{check_args, PolicyTable, Solution, ValueFunction};

/// Plain relative value iteration from `V_0 = 0`, subtracting the value of
/// the model's reference state after every sweep. Stops once the span of
/// successive value differences drops below `tol`; otherwise returns the
/// last iterate with `converged = false`.
pub fn relative_value_iteration<M: Mdp>(
    model: &M,
    max_iters: usize,
    tol: f64,
) -> Result<Solution, SolverError> {
    check_args(max_iters, tol)?;
    let kernel = Kernel::compile(model);
    Ok(run(&kernel, &mut NoShortcuts, max_iters, tol))
}

/// Greedy action at `i`; ties within [`TIE_TOLERANCE`] go to skip.
#[inline]
pub(super) fn greedy(kernel: &Kernel, i: usize, values: &[f64]) -> (Action, f64) {
    let skip = kernel.expect(i, Action::Skip, values);
    if !kernel.switch_allowed(i) {
        return (Action::Skip, skip);
    }
    let switch = kernel.expect(i, Action::Switch, values);
    if switch < skip - TIE_TOLERANCE {
        (Action::Switch, switch)
    } else {
        (Action::Skip, skip)
    }
}

pub(super) fn run<R: SweepRule>(
    kernel: &Kernel,
    rule: &mut R,
    max_iters: usize,
    tol: f64,
) -> Solution {
    let n = kernel.len();
    let reference = kernel.reference();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut actions = vec![Action::Skip; n];
    let mut span = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut hits = 0u64;

    while iterations < max_iters {
        rule.begin_sweep();
        let offset = values[reference];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let (w, future) = match kernel.switch_allowed(i) {
                false => (Action::Skip, kernel.expect(i, Action::Skip, &values)),
                true => match rule.forced(i, &actions) {
                    Some(w) => {
                        hits += 1;
                        (w, kernel.expect(i, w, &values))
                    }
                    None => greedy(kernel, i, &values),
                },
            };
            rule.record(i, w);
            actions[i] = w;
            let updated = kernel.cost(i) + future;
            let diff = updated - values[i];
            lo = lo.min(diff);
            hi = hi.max(diff);
            next[i] = updated - offset;
        }
        std::mem::swap(&mut values, &mut next);
        iterations += 1;
        span = hi - lo;
        if span < tol {
            converged = true;
            break;
        }
    }

    let gain = kernel.cost(reference) + greedy(kernel, reference, &values).1 - values[reference];
    Solution {
        values: ValueFunction {
            values,
            gain,
            iterations_run: iterations,
            span,
            converged,
        },
        policy: PolicyTable::new(actions),
        shortcut_hits: hits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uniform::{UniformModel, UniformParams};

    #[test]
    fn first_sweep_is_the_stage_cost() {
        let model = UniformModel::new(UniformParams::new(4, 0.3, 30).unwrap()).unwrap();
        let sol = relative_value_iteration(&model, 1, 1e-8).unwrap();
        for (s, v) in model.states().iter().zip(&sol.values.values) {
            // V_1 = C(s) + E[V_0] - V_0(s0) = delta
            assert_eq!(*v, s.delta as f64);
        }
        assert!(!sol.values.converged);
        assert!(sol.ensure_converged(1e-8).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        let model = UniformModel::new(UniformParams::new(4, 0.3, 30).unwrap()).unwrap();
        assert!(relative_value_iteration(&model, 0, 1e-8).is_err());
        assert!(relative_value_iteration(&model, 10, 0.0).is_err());
    }
}
