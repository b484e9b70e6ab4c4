//! Non-uniform update sizes drawn i.i.d. from a bounded PMF.
//!
//! State `(delta, l, c, b)`: AoI, remaining transmission time of the
//! in-service update, its total size, and the size of this slot's arrival
//! (`b = 0` when nothing arrives). Idle is `l = c = 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionSet};
use crate::error::ModelError;
use crate::mdp::Mdp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeMass {
    pub size: u32,
    pub prob: f64,
}

/// PMF of update sizes (transmission times in slots). Support is kept
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SizeMass>", into = "Vec<SizeMass>")]
pub struct SizeDistribution {
    support: Vec<u32>,
    probs: Vec<f64>,
}

impl SizeDistribution {
    pub fn new(mut masses: Vec<SizeMass>) -> Result<Self, ModelError> {
        if masses.is_empty() {
            return Err(ModelError::InvalidParams("size distribution is empty".into()));
        }
        masses.sort_by_key(|m| m.size);
        if masses.windows(2).any(|w| w[0].size == w[1].size) {
            return Err(ModelError::InvalidParams("duplicate sizes in support".into()));
        }
        if let Some(m) = masses.iter().find(|m| m.size < 2) {
            return Err(ModelError::InvalidParams(format!(
                "update sizes must be >= 2 slots, got {}",
                m.size
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(m.prob > 0.0)) {
            return Err(ModelError::InvalidParams(format!(
                "probability of size {} must be positive",
                m.size
            )));
        }
        let total: f64 = masses.iter().map(|m| m.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidParams(format!(
                "size probabilities sum to {total}, expected 1"
            )));
        }
        Ok(SizeDistribution {
            support: masses.iter().map(|m| m.size).collect(),
            probs: masses.iter().map(|m| m.prob).collect(),
        })
    }

    /// Uniform PMF over `sizes`.
    pub fn uniform(sizes: &[u32]) -> Result<Self, ModelError> {
        let n = sizes.len() as f64;
        Self::new(sizes.iter().map(|&size| SizeMass { size, prob: 1.0 / n }).collect())
            .or_else(|_| {
                // 1/n may not sum to exactly one in floating point; absorb the rounding
                // into the last mass.
                let mut masses: Vec<SizeMass> =
                    sizes.iter().map(|&size| SizeMass { size, prob: 1.0 / n }).collect();
                let head: f64 = masses[..masses.len() - 1].iter().map(|m| m.prob).sum();
                if let Some(last) = masses.last_mut() {
                    last.prob = 1.0 - head;
                }
                Self::new(masses)
            })
    }

    /// Point mass at `d`.
    pub fn constant(d: u32) -> Result<Self, ModelError> {
        Self::new(vec![SizeMass { size: d, prob: 1.0 }])
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_size(&self) -> u32 {
        self.support[0]
    }

    pub fn max_size(&self) -> u32 {
        *self.support.last().unwrap()
    }

    pub fn contains(&self, b: u32) -> bool {
        self.support.binary_search(&b).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }
}

impl TryFrom<Vec<SizeMass>> for SizeDistribution {
    type Error = ModelError;

    fn try_from(masses: Vec<SizeMass>) -> Result<Self, ModelError> {
        SizeDistribution::new(masses)
    }
}

impl From<SizeDistribution> for Vec<SizeMass> {
    fn from(dist: SizeDistribution) -> Self {
        dist.iter().map(|(size, prob)| SizeMass { size, prob }).collect()
    }
}

/// Parses `"5:0.5,8:0.5"`.
impl FromStr for SizeDistribution {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let bad = |part: &str| ModelError::InvalidParams(format!("bad size entry {part:?}"));
        let masses = s
            .split(',')
            .map(str::trim)
            .filter(|part| !part.is_empty())
            .map(|part| {
                let (size, prob) = part.split_once(':').ok_or_else(|| bad(part))?;
                Ok(SizeMass {
                    size: size.trim().parse().map_err(|_| bad(part))?,
                    prob: prob.trim().parse().map_err(|_| bad(part))?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        SizeDistribution::new(masses)
    }
}

impl fmt::Display for SizeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (size, prob)) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{size}:{prob}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonUniformParams {
    pub p: f64,
    pub sizes: SizeDistribution,
    pub delta_max: u32,
}

impl NonUniformParams {
    pub fn new(p: f64, sizes: SizeDistribution, delta_max: u32) -> Result<Self, ModelError> {
        let params = NonUniformParams { p, sizes, delta_max };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(ModelError::InvalidParams(format!(
                "arrival probability must lie in (0, 1), got {}",
                self.p
            )));
        }
        let bmax = self.sizes.max_size();
        if self.delta_max < 2 * bmax {
            return Err(ModelError::InvalidParams(format!(
                "delta_max must be >= 2 * max size = {}, got {}",
                2 * bmax,
                self.delta_max
            )));
        }
        Ok(())
    }

    pub fn delta_min(&self) -> u32 {
        self.sizes.min_size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NonUniformState {
    pub delta: u32,
    pub l: u32,
    pub c: u32,
    pub b: u32,
}

impl NonUniformState {
    pub fn new(delta: u32, l: u32, c: u32, b: u32) -> Self {
        NonUniformState { delta, l, c, b }
    }

    pub fn is_idle(&self) -> bool {
        self.l == 0 && self.c == 0
    }

    pub fn has_arrival(&self) -> bool {
        self.b != 0
    }
}

pub fn allowed_actions(s: &NonUniformState) -> ActionSet {
    if s.has_arrival() {
        ActionSet::Both
    } else {
        ActionSet::SkipOnly
    }
}

pub fn cost(s: &NonUniformState) -> f64 {
    s.delta as f64
}

pub fn validate_state(s: &NonUniformState, params: &NonUniformParams) -> Result<(), ModelError> {
    let sizes = &params.sizes;
    let service_ok = s.is_idle() || (sizes.contains(s.c) && s.l >= 1 && s.l < s.c);
    let arrival_ok = s.b == 0 || sizes.contains(s.b);
    let delta_ok = s.delta >= params.delta_min() && s.delta <= params.delta_max;
    if service_ok && arrival_ok && delta_ok {
        Ok(())
    } else {
        Err(ModelError::InvalidState(format!("{s:?}")))
    }
}

/// Deterministic `(delta', l', c')` part of a transition.
pub fn next_core(s: &NonUniformState, w: Action, params: &NonUniformParams) -> (u32, u32, u32) {
    let bumped = (s.delta + 1).min(params.delta_max);
    match w {
        Action::Switch => (bumped, s.b - 1, s.b),
        Action::Skip if s.l == 1 => (s.c, 0, 0),
        Action::Skip if s.l > 1 => (bumped, s.l - 1, s.c),
        Action::Skip => (bumped, 0, 0),
    }
}

/// Successor distribution: deterministic core times the arrival law
/// (`b' = 0` w.p. `1 - p`, `b' = k` w.p. `p f_b(k)`).
pub fn transition(
    s: &NonUniformState,
    w: Action,
    params: &NonUniformParams,
) -> Result<Vec<(NonUniformState, f64)>, ModelError> {
    validate_state(s, params)?;
    if !allowed_actions(s).contains(w) {
        return Err(ModelError::SwitchWithoutArrival);
    }
    let (delta, l, c) = next_core(s, w, params);
    let mut out = Vec::with_capacity(params.sizes.support().len() + 1);
    out.push((NonUniformState::new(delta, l, c, 0), 1.0 - params.p));
    for (k, fk) in params.sizes.iter() {
        out.push((NonUniformState::new(delta, l, c, k), params.p * fk));
    }
    Ok(out)
}

/// Service configurations `(l, c)` of one AoI slice in sweep order: idle
/// first, then `l` ascending and, for each `l`, `c` descending.
fn service_configs(sizes: &SizeDistribution) -> Vec<(u32, u32)> {
    let mut configs = vec![(0, 0)];
    for l in 1..sizes.max_size() {
        for &c in sizes.support().iter().rev() {
            if l < c {
                configs.push((l, c));
            }
        }
    }
    configs
}

/// Arrival values in sweep order: 0, then sizes descending.
fn arrival_values(sizes: &SizeDistribution) -> Vec<u32> {
    std::iter::once(0)
        .chain(sizes.support().iter().rev().copied())
        .collect()
}

/// All valid states, ordered by `delta` ascending, then `l` ascending, then
/// `c` descending, then `b` (0 first, sizes descending). This order puts
/// every neighbour the structured sweep consults before the state itself.
pub fn enumerate_states(params: &NonUniformParams) -> Vec<NonUniformState> {
    let configs = service_configs(&params.sizes);
    let arrivals = arrival_values(&params.sizes);
    let mut out = Vec::new();
    for delta in params.delta_min()..=params.delta_max {
        for &(l, c) in &configs {
            for &b in &arrivals {
                out.push(NonUniformState::new(delta, l, c, b));
            }
        }
    }
    out
}

/// Truncated non-uniform MDP with its enumerated state space.
#[derive(Debug, Clone)]
pub struct NonUniformModel {
    params: NonUniformParams,
    states: Vec<NonUniformState>,
    // (l, c) -> position in the slice; indexed by l * (bmax + 1) + c.
    config_pos: Vec<Option<u32>>,
    // b -> position among arrival values; indexed by b.
    arrival_pos: Vec<Option<u32>>,
    slice_len: usize,
    num_arrivals: usize,
}

impl NonUniformModel {
    pub fn new(params: NonUniformParams) -> Result<Self, ModelError> {
        params.validate()?;
        let bmax = params.sizes.max_size() as usize;
        let configs = service_configs(&params.sizes);
        let arrivals = arrival_values(&params.sizes);
        let mut config_pos = vec![None; bmax * (bmax + 1) + bmax + 1];
        for (k, &(l, c)) in configs.iter().enumerate() {
            config_pos[l as usize * (bmax + 1) + c as usize] = Some(k as u32);
        }
        let mut arrival_pos = vec![None; bmax + 1];
        for (k, &b) in arrivals.iter().enumerate() {
            arrival_pos[b as usize] = Some(k as u32);
        }
        Ok(NonUniformModel {
            states: enumerate_states(&params),
            slice_len: configs.len() * arrivals.len(),
            num_arrivals: arrivals.len(),
            params,
            config_pos,
            arrival_pos,
        })
    }

    pub fn params(&self) -> &NonUniformParams {
        &self.params
    }

    /// Number of states sharing one AoI value.
    pub fn slice_len(&self) -> usize {
        self.slice_len
    }
}

impl Mdp for NonUniformModel {
    type State = NonUniformState;

    fn states(&self) -> &[NonUniformState] {
        &self.states
    }

    fn index_of(&self, s: &NonUniformState) -> Option<usize> {
        let bmax = self.params.sizes.max_size() as usize;
        if s.delta < self.params.delta_min()
            || s.delta > self.params.delta_max
            || s.l as usize > bmax
            || s.c as usize > bmax
            || s.b as usize > bmax
        {
            return None;
        }
        let config = self.config_pos[s.l as usize * (bmax + 1) + s.c as usize]? as usize;
        let arrival = self.arrival_pos[s.b as usize]? as usize;
        Some(
            (s.delta - self.params.delta_min()) as usize * self.slice_len
                + config * self.num_arrivals
                + arrival,
        )
    }

    fn reference_state(&self) -> NonUniformState {
        NonUniformState::new(self.params.delta_min(), 0, 0, 0)
    }

    fn cost(&self, s: &NonUniformState) -> f64 {
        cost(s)
    }

    fn allowed_actions(&self, s: &NonUniformState) -> ActionSet {
        allowed_actions(s)
    }

    fn transition(
        &self,
        s: &NonUniformState,
        w: Action,
    ) -> Result<Vec<(NonUniformState, f64)>, ModelError> {
        transition(s, w, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_eight(delta_max: u32) -> NonUniformParams {
        NonUniformParams::new(0.14, "5:0.5,8:0.5".parse().unwrap(), delta_max).unwrap()
    }

    fn core_of(next: &[(NonUniformState, f64)]) -> (u32, u32, u32) {
        let s = next[0].0;
        assert!(next.iter().all(|(t, _)| (t.delta, t.l, t.c) == (s.delta, s.l, s.c)));
        (s.delta, s.l, s.c)
    }

    #[test]
    fn delivery_resets_to_delivered_size() {
        let pr = five_eight(1000);
        let next = transition(&NonUniformState::new(12, 1, 8, 0), Action::Skip, &pr).unwrap();
        assert_eq!(core_of(&next), (8, 0, 0));
        let law: Vec<(u32, f64)> = next.iter().map(|(t, p)| (t.b, *p)).collect();
        assert_eq!(law, vec![(0, 0.86), (5, 0.07), (8, 0.07)]);
    }

    #[test]
    fn switch_starts_new_update() {
        let pr = five_eight(1000);
        let next = transition(&NonUniformState::new(12, 3, 8, 5), Action::Switch, &pr).unwrap();
        assert_eq!(core_of(&next), (13, 4, 5));
    }

    #[test]
    fn idle_increments() {
        let pr = five_eight(1000);
        let next = transition(&NonUniformState::new(12, 0, 0, 0), Action::Skip, &pr).unwrap();
        assert_eq!(core_of(&next), (13, 0, 0));
    }

    #[test]
    fn cost_is_the_aoi() {
        assert_eq!(cost(&NonUniformState::new(8, 0, 0, 0)), 8.0);
        assert_eq!(cost(&NonUniformState::new(5, 4, 5, 0)), 5.0);
        assert_eq!(cost(&NonUniformState::new(1000, 1, 8, 5)), 1000.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let pr = five_eight(1000);
        assert_eq!(
            transition(&NonUniformState::new(12, 3, 8, 0), Action::Switch, &pr).unwrap_err(),
            ModelError::SwitchWithoutArrival
        );
        // l must stay below c, c must be in the support, delta >= min size.
        assert!(transition(&NonUniformState::new(12, 8, 8, 0), Action::Skip, &pr).is_err());
        assert!(transition(&NonUniformState::new(12, 2, 6, 0), Action::Skip, &pr).is_err());
        assert!(transition(&NonUniformState::new(4, 0, 0, 0), Action::Skip, &pr).is_err());
        assert!(transition(&NonUniformState::new(12, 0, 0, 6), Action::Skip, &pr).is_err());
    }

    #[test]
    fn size_distribution_validation() {
        assert!("1:0.5,5:0.5".parse::<SizeDistribution>().is_err());
        assert!("5:0.5,5:0.5".parse::<SizeDistribution>().is_err());
        assert!("5:0.4,8:0.5".parse::<SizeDistribution>().is_err());
        assert!("5:0,8:1".parse::<SizeDistribution>().is_err());
        assert!("".parse::<SizeDistribution>().is_err());
        let d: SizeDistribution = "8:0.25, 5:0.75".parse().unwrap();
        assert_eq!(d.support(), &[5, 8]);
        assert_eq!(d.to_string(), "5:0.75,8:0.25");
        assert!(SizeDistribution::uniform(&[3, 4, 7]).is_ok());
        assert!(NonUniformParams::new(0.1, d.clone(), 15).is_err());
        assert!(NonUniformParams::new(1.0, d, 100).is_err());
    }

    #[test]
    fn slice_sizes() {
        let model = NonUniformModel::new(five_eight(1000)).unwrap();
        assert_eq!(model.slice_len(), 36);
        assert_eq!(model.states().len(), 36 * (1000 - 5 + 1));
        assert_eq!(model.states()[0].delta, 5);

        let two = NonUniformParams::new(0.3, SizeDistribution::constant(2).unwrap(), 10).unwrap();
        let model = NonUniformModel::new(two).unwrap();
        // idle + (l=1, c=2), times b in {0, 2}
        assert_eq!(model.slice_len(), 2 * 2);
    }

    #[test]
    fn exhaustive_kernel_properties() {
        let pr = NonUniformParams::new(0.3, "3:0.2,4:0.5,6:0.3".parse().unwrap(), 20).unwrap();
        let model = NonUniformModel::new(pr.clone()).unwrap();
        for (i, s) in model.states().iter().enumerate() {
            assert_eq!(model.index_of(s), Some(i));
            for w in allowed_actions(s).to_vec() {
                let next = transition(s, w, &pr).unwrap();
                let total: f64 = next.iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
                for (t, _) in &next {
                    assert!(model.index_of(t).is_some(), "{t:?} escapes the space");
                    if s.l == 1 && w == Action::Skip {
                        assert_eq!(t.delta, s.c);
                    }
                    if w == Action::Switch {
                        assert!(t.l < t.c);
                    }
                    if s.is_idle() && !s.has_arrival() {
                        assert!(t.is_idle());
                        assert_eq!(t.delta, (s.delta + 1).min(pr.delta_max));
                    }
                }
            }
        }
    }

    #[test]
    fn serde_round_trip_of_sizes() {
        let d: SizeDistribution = "5:0.5,8:0.5".parse().unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"[{"size":5,"prob":0.5},{"size":8,"prob":0.5}]"#);
        let back: SizeDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<SizeDistribution>(r#"[{"size":1,"prob":1.0}]"#).is_err());
    }
}
