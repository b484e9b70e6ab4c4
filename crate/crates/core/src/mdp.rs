//! Finite MDP abstraction shared by the two models, and its compiled
//! sparse form that the solvers iterate over.

use std::fmt::Debug;

use crate::action::{Action, ActionSet};
use crate::error::ModelError;

/// A finite, truncated average-cost MDP with binary skip/switch actions.
pub trait Mdp {
    type State: Copy + Debug + PartialEq;

    /// All states in the model's canonical (sweep) order.
    fn states(&self) -> &[Self::State];
    fn index_of(&self, s: &Self::State) -> Option<usize>;
    fn reference_state(&self) -> Self::State;
    fn cost(&self, s: &Self::State) -> f64;
    fn allowed_actions(&self, s: &Self::State) -> ActionSet;
    fn transition(
        &self,
        s: &Self::State,
        w: Action,
    ) -> Result<Vec<(Self::State, f64)>, ModelError>;

    fn reference_index(&self) -> usize {
        self.index_of(&self.reference_state())
            .expect("reference state belongs to the state space")
    }

    fn num_states(&self) -> usize {
        self.states().len()
    }
}

/// Compressed transition table of an [`Mdp`]: per state, the stage cost and
/// the successor distributions of each admissible action.
#[derive(Debug, Clone)]
pub struct Kernel {
    costs: Vec<f64>,
    // CSR ranges into `succ`; `switch_range` is empty when switching is not allowed.
    skip_start: Vec<u32>,
    switch_start: Vec<u32>,
    switch_allowed: Vec<bool>,
    succ: Vec<(u32, f64)>,
    reference: usize,
}

impl Kernel {
    pub fn compile<M: Mdp>(model: &M) -> Self {
        let states = model.states();
        let n = states.len();
        let mut costs = Vec::with_capacity(n);
        let mut skip_start = Vec::with_capacity(n + 1);
        let mut switch_start = Vec::with_capacity(n + 1);
        let mut switch_allowed = Vec::with_capacity(n);
        let mut succ = Vec::new();

        let push = |succ: &mut Vec<(u32, f64)>, s: &M::State, w: Action| {
            let next = model
                .transition(s, w)
                .expect("enumerated states and admissible actions have transitions");
            for (t, p) in next {
                let j = model
                    .index_of(&t)
                    .expect("successor lies inside the truncated state space");
                succ.push((j as u32, p));
            }
        };

        for s in states {
            costs.push(model.cost(s));
            skip_start.push(succ.len() as u32);
            push(&mut succ, s, Action::Skip);
            switch_start.push(succ.len() as u32);
            let allowed = model.allowed_actions(s) == ActionSet::Both;
            switch_allowed.push(allowed);
            if allowed {
                push(&mut succ, s, Action::Switch);
            }
        }
        skip_start.push(succ.len() as u32);
        switch_start.push(succ.len() as u32);

        Kernel {
            costs,
            skip_start,
            switch_start,
            switch_allowed,
            succ,
            reference: model.reference_index(),
        }
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.costs[i]
    }

    pub fn switch_allowed(&self, i: usize) -> bool {
        self.switch_allowed[i]
    }

    pub fn successors(&self, i: usize, w: Action) -> &[(u32, f64)] {
        match w {
            Action::Skip => &self.succ[self.skip_start[i] as usize..self.switch_start[i] as usize],
            Action::Switch => {
                &self.succ[self.switch_start[i] as usize..self.skip_start[i + 1] as usize]
            }
        }
    }

    /// Expected value of `values` at the successor of `(i, w)`.
    #[inline]
    pub fn expect(&self, i: usize, w: Action, values: &[f64]) -> f64 {
        self.successors(i, w)
            .iter()
            .map(|&(j, p)| p * values[j as usize])
            .sum()
    }
}
