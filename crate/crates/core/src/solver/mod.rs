//! Relative value iteration (plain and structured), discounted value
//! iteration, fixed-policy evaluation and threshold extraction.

mod discounted;
mod evaluate;
mod rvi;
mod shortcuts;
mod structure;
mod thresholds;

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::{PolicyError, SolverError};
use crate::mdp::{Kernel, Mdp};
use crate::nonuniform::NonUniformModel;
use crate::uniform::UniformModel;

pub use discounted::discounted_value_iteration;
pub use evaluate::{evaluate_policy, Evaluation};
pub use rvi::relative_value_iteration;
pub use structure::{
    check_nonuniform_structure, check_uniform_structure, check_value_monotonicity,
    NonUniformStructure, UniformStructure, ValueMonotonicity,
};
pub use thresholds::{extract_thresholds, ThresholdSummary};

/// Relative values of every state (in model order) plus the gain estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    /// Average-cost estimate: the Bellman constant at the reference state for
    /// relative value iteration, `(1 - alpha) V(s0)` for discounted runs.
    pub gain: f64,
    pub iterations_run: usize,
    /// Span (or sup-norm, for discounted runs) of the last value change.
    pub span: f64,
    pub converged: bool,
}

/// Deterministic stationary policy over a model's enumerated states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTable {
    actions: Vec<Action>,
}

impl PolicyTable {
    pub fn new(actions: Vec<Action>) -> Self {
        PolicyTable { actions }
    }

    /// Builds a table from `f`, forcing skip wherever switching is not allowed.
    pub fn from_fn<M: Mdp>(model: &M, mut f: impl FnMut(&M::State) -> Action) -> Self {
        PolicyTable {
            actions: model
                .states()
                .iter()
                .map(|s| match model.allowed_actions(s).contains(Action::Switch) {
                    true => f(s),
                    false => Action::Skip,
                })
                .collect(),
        }
    }

    pub fn action(&self, i: usize) -> Action {
        self.actions[i]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn lookup<M: Mdp>(&self, model: &M, s: &M::State) -> Option<Action> {
        model.index_of(s).map(|i| self.actions[i])
    }

    /// Checks totality and feasibility against `model`.
    pub fn validate<M: Mdp>(&self, model: &M) -> Result<(), PolicyError> {
        if self.actions.len() != model.num_states() {
            return Err(PolicyError::TableSize {
                expected: model.num_states(),
                got: self.actions.len(),
            });
        }
        for (i, s) in model.states().iter().enumerate() {
            if !model.allowed_actions(s).contains(self.actions[i]) {
                return Err(PolicyError::Infeasible(i));
            }
        }
        Ok(())
    }

    /// Number of states at which the two tables disagree.
    pub fn differences(&self, other: &PolicyTable) -> usize {
        self.actions
            .iter()
            .zip(&other.actions)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Output of a value-iteration run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: ValueFunction,
    pub policy: PolicyTable,
    /// Number of Q-value comparisons skipped thanks to structural shortcuts
    /// (zero for the plain solver).
    pub shortcut_hits: u64,
}

impl Solution {
    pub fn gain(&self) -> f64 {
        self.values.gain
    }

    pub fn ensure_converged(&self, tol: f64) -> Result<&Self, SolverError> {
        if self.values.converged {
            Ok(self)
        } else {
            Err(SolverError::NotConverged {
                iterations: self.values.iterations_run,
                span: self.values.span,
                tol,
            })
        }
    }
}

fn check_args(max_iters: usize, tol: f64) -> Result<(), SolverError> {
    if max_iters == 0 {
        return Err(SolverError::InvalidArgument("max_iters must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(SolverError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// Structured relative value iteration for the uniform model.
///
/// Per state, before comparing Q-values: no arrival forces skip; a skip at
/// `(delta', u, 1)` for some `delta' < delta` forces skip; a switch at
/// `(delta, u', 1)` for some busy `1 <= u' < u` forces switch.
pub fn structured_vi_uniform(
    model: &UniformModel,
    max_iters: usize,
    tol: f64,
) -> Result<Solution, SolverError> {
    check_args(max_iters, tol)?;
    let kernel = Kernel::compile(model);
    let mut rule = shortcuts::UniformRule::new(model.params().d);
    Ok(rvi::run(&kernel, &mut rule, max_iters, tol))
}

/// Structured relative value iteration for the non-uniform model.
///
/// Shortcuts, in order: no arrival forces skip; idle with an arrival forces
/// switch; a skip at a smaller AoI forces skip; a skip with a larger
/// in-service size forces skip; a switch for a larger arrival forces switch;
/// an arrival no larger than the remaining time forces switch.
pub fn structured_vi_nonuniform(
    model: &NonUniformModel,
    max_iters: usize,
    tol: f64,
) -> Result<Solution, SolverError> {
    check_args(max_iters, tol)?;
    let kernel = Kernel::compile(model);
    let mut rule = shortcuts::NonUniformRule::new(model);
    Ok(rvi::run(&kernel, &mut rule, max_iters, tol))
}
