use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::mdp::Mdp;
use crate::nonuniform::{NonUniformModel, NonUniformState};
use crate::uniform::UniformModel;

use super::PolicyTable;

/// Violations of the uniform-model policy structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UniformStructure {
    /// Skip at `(delta, u, 1)` but switch at `(delta + 1, u, 1)`.
    pub delta_monotone: usize,
    /// Switch at `(delta, u', 1)` but skip at `(delta, u, 1)`, `1 <= u' < u`.
    pub u_monotone: usize,
    /// Idle with an arrival but skip.
    pub idle_rule: usize,
}

impl UniformStructure {
    pub fn total(&self) -> usize {
        self.delta_monotone + self.u_monotone + self.idle_rule
    }
}

pub fn check_uniform_structure(model: &UniformModel, policy: &PolicyTable) -> UniformStructure {
    let params = model.params();
    let at = |delta, u| policy.action(model.arrival_index(delta, u));
    let mut report = UniformStructure::default();
    for delta in params.d..=params.delta_max {
        if at(delta, 0) == Action::Skip {
            report.idle_rule += 1;
        }
        let mut switched = false;
        for u in 1..params.d {
            let w = at(delta, u);
            if delta < params.delta_max && w == Action::Skip && at(delta + 1, u) == Action::Switch {
                report.delta_monotone += 1;
            }
            match w {
                Action::Switch => switched = true,
                Action::Skip if switched => report.u_monotone += 1,
                Action::Skip => {}
            }
        }
    }
    report
}

/// Violations of the five non-uniform structural properties, counted per
/// offending state (or state pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NonUniformStructure {
    /// Switch for arrival `b` but skip for some smaller arrival `b'`.
    pub a_smaller_arrival: usize,
    /// Skip although `0 < b <= l`.
    pub b_short_arrival: usize,
    /// Switch with in-service size `c` but skip with a larger size `c'`.
    pub c_larger_in_service: usize,
    /// Idle with an arrival but skip.
    pub d_idle: usize,
    /// Skip at `delta` but switch at `delta + 1`.
    pub e_delta_monotone: usize,
}

impl NonUniformStructure {
    pub fn total(&self) -> usize {
        self.a_smaller_arrival
            + self.b_short_arrival
            + self.c_larger_in_service
            + self.d_idle
            + self.e_delta_monotone
    }
}

pub fn check_nonuniform_structure(
    model: &NonUniformModel,
    policy: &PolicyTable,
) -> NonUniformStructure {
    let support = model.params().sizes.support();
    let delta_max = model.params().delta_max;
    let at = |s: NonUniformState| model.index_of(&s).map(|i| policy.action(i));
    let mut report = NonUniformStructure::default();
    for (k, s) in model.states().iter().enumerate() {
        if s.b == 0 {
            continue;
        }
        let w = policy.action(k);
        if s.is_idle() {
            if w == Action::Skip {
                report.d_idle += 1;
            }
            continue;
        }
        if s.b <= s.l && w == Action::Skip {
            report.b_short_arrival += 1;
        }
        if s.delta < delta_max
            && w == Action::Skip
            && at(NonUniformState { delta: s.delta + 1, ..*s }) == Some(Action::Switch)
        {
            report.e_delta_monotone += 1;
        }
        if w == Action::Switch {
            report.a_smaller_arrival += support
                .iter()
                .filter(|&&b| b < s.b)
                .filter(|&&b| at(NonUniformState { b, ..*s }) == Some(Action::Skip))
                .count();
            report.c_larger_in_service += support
                .iter()
                .filter(|&&c| c > s.c)
                .filter(|&&c| at(NonUniformState { c, ..*s }) == Some(Action::Skip))
                .count();
        }
    }
    report
}

/// Violations of monotonicity of a value function: nondecreasing in `delta`,
/// and in `c` and `b` where they are positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValueMonotonicity {
    pub delta: usize,
    pub c: usize,
    pub b: usize,
}

pub fn check_value_monotonicity(
    model: &NonUniformModel,
    values: &[f64],
    slack: f64,
) -> ValueMonotonicity {
    let support = model.params().sizes.support();
    let value = |s: NonUniformState| model.index_of(&s).map(|i| values[i]);
    let mut report = ValueMonotonicity::default();
    for (k, s) in model.states().iter().enumerate() {
        let v = values[k];
        let decreases = |next: Option<f64>| next.is_some_and(|n| n < v - slack);
        if decreases(value(NonUniformState { delta: s.delta + 1, ..*s })) {
            report.delta += 1;
        }
        if s.c > 0 {
            let next_c = support.iter().find(|&&c| c > s.c);
            if next_c.is_some_and(|&c| decreases(value(NonUniformState { c, ..*s }))) {
                report.c += 1;
            }
        }
        if s.b > 0 {
            let next_b = support.iter().find(|&&b| b > s.b);
            if next_b.is_some_and(|&b| decreases(value(NonUniformState { b, ..*s }))) {
                report.b += 1;
            }
        }
    }
    report
}
