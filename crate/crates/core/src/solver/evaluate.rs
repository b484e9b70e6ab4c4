use serde::{Deserialize, Serialize};

use crate::error::{PolicyError, SolverError};
use crate::mdp::{Kernel, Mdp};

use super::{check_args, PolicyTable};

/// Long-run average cost of a fixed policy on the truncated model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub gain: f64,
    pub iterations: usize,
    pub span: f64,
    pub converged: bool,
}

impl Evaluation {
    pub fn ensure_converged(self, tol: f64) -> Result<Self, SolverError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SolverError::NotConverged {
                iterations: self.iterations,
                span: self.span,
                tol,
            })
        }
    }
}

/// Fixed-policy relative value iteration:
/// `V_{n+1} = C + P_pi V_n - V_n(s0)` until the span of successive
/// differences is below `tol`.
pub fn evaluate_policy<M: Mdp>(
    model: &M,
    policy: &PolicyTable,
    max_iters: usize,
    tol: f64,
) -> Result<Evaluation, PolicyError> {
    check_args(max_iters, tol)?;
    policy.validate(model)?;
    let kernel = Kernel::compile(model);
    let n = kernel.len();
    let reference = kernel.reference();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut span = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        let offset = values[reference];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let updated = kernel.cost(i) + kernel.expect(i, policy.action(i), &values);
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

    let gain = kernel.cost(reference)
        + kernel.expect(reference, policy.action(reference), &values)
        - values[reference];
    Ok(Evaluation {
        gain,
        iterations,
        span,
        converged,
    })
}
