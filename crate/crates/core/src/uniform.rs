//! Uniform update size: every update needs exactly `d` slots.
//!
//! State `(delta, u, a)`: AoI at the start of the slot, age of the unfinished
//! update (`u = 0` means idle) and the arrival indicator. AoI saturates at
//! `delta_max`.

use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionSet};
use crate::error::ModelError;
use crate::mdp::Mdp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformParams {
    pub d: u32,
    pub p: f64,
    pub delta_max: u32,
}

impl UniformParams {
    pub fn new(d: u32, p: f64, delta_max: u32) -> Result<Self, ModelError> {
        let params = UniformParams { d, p, delta_max };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d < 2 {
            return Err(ModelError::InvalidParams(format!(
                "transmission time d must be >= 2, got {}",
                self.d
            )));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(ModelError::InvalidParams(format!(
                "arrival probability must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.delta_max < 2 * self.d {
            return Err(ModelError::InvalidParams(format!(
                "delta_max must be >= 2d = {}, got {}",
                2 * self.d,
                self.delta_max
            )));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        (self.delta_max - self.d + 1) as usize * self.d as usize * 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UniformState {
    pub delta: u32,
    pub u: u32,
    pub a: u8,
}

impl UniformState {
    pub fn new(delta: u32, u: u32, a: u8) -> Self {
        UniformState { delta, u, a }
    }

    pub fn has_arrival(&self) -> bool {
        self.a == 1
    }

    pub fn is_idle(&self) -> bool {
        self.u == 0
    }
}

pub fn allowed_actions(s: &UniformState) -> ActionSet {
    if s.has_arrival() {
        ActionSet::Both
    } else {
        ActionSet::SkipOnly
    }
}

pub fn cost(s: &UniformState) -> f64 {
    s.delta as f64
}

/// Deterministic `(delta', u')` part of a transition.
pub fn next_core(s: &UniformState, w: Action, params: &UniformParams) -> (u32, u32) {
    let d = params.d;
    let bumped = (s.delta + 1).min(params.delta_max);
    match w {
        Action::Switch => (bumped, 1),
        Action::Skip if s.u == d - 1 => (d, 0),
        Action::Skip if s.u == 0 => (bumped, 0),
        Action::Skip => (bumped, s.u + 1),
    }
}

pub fn validate_state(s: &UniformState, params: &UniformParams) -> Result<(), ModelError> {
    if s.delta < params.d || s.delta > params.delta_max || s.u >= params.d || s.a > 1 {
        return Err(ModelError::InvalidState(format!(
            "{s:?} outside d={} delta_max={}",
            params.d, params.delta_max
        )));
    }
    Ok(())
}

/// Successor distribution: the deterministic core times a Bernoulli(p) arrival.
pub fn transition(
    s: &UniformState,
    w: Action,
    params: &UniformParams,
) -> Result<Vec<(UniformState, f64)>, ModelError> {
    validate_state(s, params)?;
    if !allowed_actions(s).contains(w) {
        return Err(ModelError::SwitchWithoutArrival);
    }
    let (delta, u) = next_core(s, w, params);
    Ok(vec![
        (UniformState::new(delta, u, 1), params.p),
        (UniformState::new(delta, u, 0), 1.0 - params.p),
    ])
}

/// All states in lexicographic `(delta, u, a)` order.
pub fn enumerate_states(params: &UniformParams) -> Vec<UniformState> {
    let mut out = Vec::with_capacity(params.num_states());
    for delta in params.d..=params.delta_max {
        for u in 0..params.d {
            for a in 0..2 {
                out.push(UniformState::new(delta, u, a));
            }
        }
    }
    out
}

/// Truncated uniform-size MDP with its enumerated state space.
#[derive(Debug, Clone)]
pub struct UniformModel {
    params: UniformParams,
    states: Vec<UniformState>,
}

impl UniformModel {
    pub fn new(params: UniformParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(UniformModel {
            params,
            states: enumerate_states(&params),
        })
    }

    pub fn params(&self) -> &UniformParams {
        &self.params
    }

    /// Index of `(delta, u, 1)` without bounds checks beyond debug asserts.
    pub fn arrival_index(&self, delta: u32, u: u32) -> usize {
        self.raw_index(delta, u, 1)
    }

    fn raw_index(&self, delta: u32, u: u32, a: u8) -> usize {
        debug_assert!(delta >= self.params.d && u < self.params.d);
        (((delta - self.params.d) * self.params.d + u) * 2 + a as u32) as usize
    }
}

impl Mdp for UniformModel {
    type State = UniformState;

    fn states(&self) -> &[UniformState] {
        &self.states
    }

    fn index_of(&self, s: &UniformState) -> Option<usize> {
        validate_state(s, &self.params).ok()?;
        Some(self.raw_index(s.delta, s.u, s.a))
    }

    fn reference_state(&self) -> UniformState {
        UniformState::new(self.params.d, 0, 0)
    }

    fn cost(&self, s: &UniformState) -> f64 {
        cost(s)
    }

    fn allowed_actions(&self, s: &UniformState) -> ActionSet {
        allowed_actions(s)
    }

    fn transition(
        &self,
        s: &UniformState,
        w: Action,
    ) -> Result<Vec<(UniformState, f64)>, ModelError> {
        transition(s, w, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(d: u32, p: f64, delta_max: u32) -> UniformParams {
        UniformParams::new(d, p, delta_max).unwrap()
    }

    #[test]
    fn allowed_actions_follow_arrival_flag() {
        assert_eq!(allowed_actions(&UniformState::new(10, 0, 1)), ActionSet::Both);
        assert_eq!(allowed_actions(&UniformState::new(10, 0, 0)), ActionSet::SkipOnly);
        assert_eq!(allowed_actions(&UniformState::new(15, 4, 1)), ActionSet::Both);
    }

    #[test]
    fn delivery_resets_to_d() {
        let pr = params(10, 0.3, 1000);
        let next = transition(&UniformState::new(19, 9, 0), Action::Skip, &pr).unwrap();
        assert_eq!(
            next,
            vec![
                (UniformState::new(10, 0, 1), 0.3),
                (UniformState::new(10, 0, 0), 0.7)
            ]
        );
    }

    #[test]
    fn switch_restarts_service() {
        let pr = params(10, 0.3, 1000);
        let next = transition(&UniformState::new(15, 3, 1), Action::Switch, &pr).unwrap();
        assert_eq!(next[0].0, UniformState::new(16, 1, 1));
        assert_eq!(next[1].0, UniformState::new(16, 1, 0));
    }

    #[test]
    fn idle_stays_idle() {
        let pr = params(10, 0.3, 1000);
        let next = transition(&UniformState::new(20, 0, 0), Action::Skip, &pr).unwrap();
        assert_eq!(next[0].0, UniformState::new(21, 0, 1));
        assert_eq!(next[1].0, UniformState::new(21, 0, 0));
    }

    #[test]
    fn switch_without_arrival_is_rejected() {
        let pr = params(10, 0.3, 1000);
        let err = transition(&UniformState::new(20, 3, 0), Action::Switch, &pr).unwrap_err();
        assert_eq!(err, ModelError::SwitchWithoutArrival);
    }

    #[test]
    fn out_of_range_state_is_rejected() {
        let pr = params(10, 0.3, 1000);
        assert!(transition(&UniformState::new(9, 0, 0), Action::Skip, &pr).is_err());
        assert!(transition(&UniformState::new(12, 10, 0), Action::Skip, &pr).is_err());
    }

    #[test]
    fn cost_is_the_aoi() {
        assert_eq!(cost(&UniformState::new(10, 0, 0)), 10.0);
        assert_eq!(cost(&UniformState::new(4, 0, 0)), 4.0);
        assert_eq!(cost(&UniformState::new(1000, 5, 1)), 1000.0);
    }

    #[test]
    fn state_counts() {
        assert_eq!(enumerate_states(&params(10, 0.1, 1000)).len(), 19_820);
        assert_eq!(enumerate_states(&params(2, 0.1, 4)).len(), 12);
        assert_eq!(
            enumerate_states(&params(10, 0.1, 1000))[0],
            UniformState::new(10, 0, 0)
        );
    }

    #[test]
    fn invalid_params() {
        assert!(UniformParams::new(1, 0.5, 10).is_err());
        assert!(UniformParams::new(3, 0.0, 10).is_err());
        assert!(UniformParams::new(3, 1.0, 10).is_err());
        assert!(UniformParams::new(3, 0.5, 5).is_err());
    }

    #[test]
    fn exhaustive_kernel_properties() {
        let pr = params(4, 0.35, 20);
        let model = UniformModel::new(pr).unwrap();
        for (i, s) in model.states().iter().enumerate() {
            assert_eq!(model.index_of(s), Some(i));
            for w in allowed_actions(s).to_vec() {
                let next = transition(s, w, &pr).unwrap();
                let total: f64 = next.iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
                for (t, _) in &next {
                    assert!(t.delta <= pr.delta_max);
                    if t.delta < s.delta {
                        assert!(s.u == pr.d - 1 && w == Action::Skip);
                    }
                    if s.u == pr.d - 1 && w == Action::Skip {
                        assert_eq!((t.delta, t.u), (pr.d, 0));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn sorted_enumeration(d in 2u32..6, extra in 0u32..10) {
            let pr = params(d, 0.5, 2 * d + extra);
            let states = enumerate_states(&pr);
            prop_assert_eq!(states.len(), pr.num_states());
            prop_assert!(states.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
