use crate::action::Action;
use crate::error::SolverError;
use crate::mdp::{Kernel, Mdp};

use super::rvi::greedy;
use super::{check_args, PolicyTable, Solution, ValueFunction};

/// Value iteration for the alpha-discounted cost from `V_0 = 0`, until the
/// sup-norm change falls below `tol`. The reported gain is
/// `(1 - alpha) V(s0)`.
pub fn discounted_value_iteration<M: Mdp>(
    model: &M,
    alpha: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Solution, SolverError> {
    check_args(max_iters, tol)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SolverError::InvalidArgument(format!(
            "discount factor must lie in (0, 1), got {alpha}"
        )));
    }
    let kernel = Kernel::compile(model);
    let n = kernel.len();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut actions = vec![Action::Skip; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        change = 0.0;
        for i in 0..n {
            let (w, future) = greedy(&kernel, i, &values);
            actions[i] = w;
            next[i] = kernel.cost(i) + alpha * future;
            change = f64::max(change, (next[i] - values[i]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        iterations += 1;
        if change < tol {
            converged = true;
            break;
        }
    }

    let gain = (1.0 - alpha) * values[kernel.reference()];
    Ok(Solution {
        values: ValueFunction {
            values,
            gain,
            iterations_run: iterations,
            span: change,
            converged,
        },
        policy: PolicyTable::new(actions),
        shortcut_hits: 0,
    })
}
