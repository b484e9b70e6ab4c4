//! Structural shortcuts consulted during a sweep. They only look at actions
//! already decided in the current sweep; states are swept in model order.

use crate::action::Action;
use crate::mdp::Mdp;
use crate::nonuniform::{NonUniformModel, NonUniformState};

pub(super) trait SweepRule {
    fn begin_sweep(&mut self);
    /// Action implied by decisions earlier in this sweep, if any. Only called
    /// for states where switching is allowed.
    fn forced(&mut self, i: usize, decided: &[Action]) -> Option<Action>;
    fn record(&mut self, i: usize, w: Action);
}

pub(super) struct NoShortcuts;

impl SweepRule for NoShortcuts {
    fn begin_sweep(&mut self) {}

    fn forced(&mut self, _: usize, _: &[Action]) -> Option<Action> {
        None
    }

    fn record(&mut self, _: usize, _: Action) {}
}

/// Uniform model, states indexed as `((delta - d) * d + u) * 2 + a`.
pub(super) struct UniformRule {
    d: usize,
    // skip recorded at (delta', u, 1) for some delta' below the current one
    skipped_below: Vec<bool>,
    // switch recorded at (delta, u', 1), u' >= 1, for the current delta
    switched_busy: bool,
    current_delta: usize,
}

impl UniformRule {
    pub(super) fn new(d: u32) -> Self {
        UniformRule {
            d: d as usize,
            skipped_below: vec![false; d as usize],
            switched_busy: false,
            current_delta: usize::MAX,
        }
    }

    fn decode(&self, i: usize) -> (usize, usize) {
        (i / (2 * self.d), (i / 2) % self.d)
    }
}

impl SweepRule for UniformRule {
    fn begin_sweep(&mut self) {
        self.skipped_below.fill(false);
        self.switched_busy = false;
        self.current_delta = usize::MAX;
    }

    fn forced(&mut self, i: usize, _: &[Action]) -> Option<Action> {
        let (delta, u) = self.decode(i);
        if delta != self.current_delta {
            self.current_delta = delta;
            self.switched_busy = false;
        }
        if self.skipped_below[u] {
            Some(Action::Skip)
        } else if u >= 1 && self.switched_busy {
            Some(Action::Switch)
        } else {
            None
        }
    }

    fn record(&mut self, i: usize, w: Action) {
        if i.is_multiple_of(2) {
            return;
        }
        let (_, u) = self.decode(i);
        match w {
            // Takes effect for larger delta only: within one delta each u occurs once.
            Action::Skip => self.skipped_below[u] = true,
            Action::Switch if u >= 1 => self.switched_busy = true,
            Action::Switch => {}
        }
    }
}

pub(super) struct NonUniformRule<'a> {
    model: &'a NonUniformModel,
    slice_len: usize,
    skipped_below: Vec<bool>,
}

impl<'a> NonUniformRule<'a> {
    pub(super) fn new(model: &'a NonUniformModel) -> Self {
        NonUniformRule {
            model,
            slice_len: model.slice_len(),
            skipped_below: vec![false; model.slice_len()],
        }
    }

    fn decided_at(&self, s: NonUniformState, decided: &[Action]) -> Option<Action> {
        self.model.index_of(&s).map(|j| decided[j])
    }
}

impl SweepRule for NonUniformRule<'_> {
    fn begin_sweep(&mut self) {
        self.skipped_below.fill(false);
    }

    fn forced(&mut self, i: usize, decided: &[Action]) -> Option<Action> {
        let s = self.model.states()[i];
        if s.b == 0 {
            return Some(Action::Skip);
        }
        if s.is_idle() {
            return Some(Action::Switch);
        }
        if self.skipped_below[i % self.slice_len] {
            return Some(Action::Skip);
        }
        let support = self.model.params().sizes.support();
        let larger_c_skips = support
            .iter()
            .filter(|&&c| c > s.c)
            .any(|&c| {
                self.decided_at(NonUniformState { c, ..s }, decided) == Some(Action::Skip)
            });
        if larger_c_skips {
            return Some(Action::Skip);
        }
        let larger_b_switches = support
            .iter()
            .filter(|&&b| b > s.b)
            .any(|&b| {
                self.decided_at(NonUniformState { b, ..s }, decided) == Some(Action::Switch)
            });
        if larger_b_switches || s.b <= s.l {
            return Some(Action::Switch);
        }
        None
    }

    fn record(&mut self, i: usize, w: Action) {
        if w == Action::Skip {
            self.skipped_below[i % self.slice_len] = true;
        }
    }
}
