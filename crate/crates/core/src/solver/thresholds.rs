use serde::{Deserialize, Serialize};

use crate::error::SolverError;

use crate::uniform::{UniformModel, UniformState};

use super::PolicyTable;

/// Epoch thresholds `tau_1 >= ... >= tau_K` of a sequential-switching
/// policy: an update that arrived in epoch slot `i <= K` is preempted by the
/// next arrival iff that arrival lands in slot `j <= tau_i`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThresholdSummary {
    taus: Vec<u32>,
}

impl ThresholdSummary {
    pub fn new(taus: Vec<u32>) -> Result<Self, SolverError> {
        for (k, &tau) in taus.iter().enumerate() {
            let i = k as u32 + 1;
            if tau < i {
                return Err(SolverError::BelowIndex { i, tau });
            }
            if let Some(&lower) = taus.get(k + 1) {
                if lower > tau {
                    return Err(SolverError::NotMonotone { i, upper: tau, lower });
                }
            }
        }
        Ok(ThresholdSummary { taus })
    }

    /// `K = 0`: never preempt.
    pub fn empty() -> Self {
        ThresholdSummary::default()
    }

    pub fn taus(&self) -> &[u32] {
        &self.taus
    }

    pub fn k(&self) -> u32 {
        self.taus.len() as u32
    }

    /// `tau_i` for `1 <= i <= K`.
    pub fn tau(&self, i: u32) -> Option<u32> {
        if i == 0 {
            return None;
        }
        self.taus.get(i as usize - 1).copied()
    }

    /// Whether an arrival in epoch slot `j` preempts the update that arrived
    /// in slot `i`.
    pub fn accepts(&self, i: u32, j: u32) -> bool {
        self.tau(i).is_some_and(|tau| j <= tau)
    }
}

/// Reads the epoch thresholds off a uniform-model policy.
///
/// A busy arrival state `(delta, u, 1)` below the AoI cap sits at arrival
/// slot `j = delta - d + 1` of an epoch whose in-service update arrived in
/// slot `i = j - u`; states with `i < 1` are unreachable and ignored. For
/// each `i`, `tau_i` is the largest `j` at which the policy switches, and
/// `K` the largest `i` with any switch. Rows that switch throughout the
/// service window are lifted to keep the sequence non-increasing. Fails if
/// some `i` switches at a `j` but skips at a smaller one, or if the binding
/// thresholds are not non-increasing.
pub fn extract_thresholds(
    model: &UniformModel,
    policy: &PolicyTable,
) -> Result<ThresholdSummary, SolverError> {
    policy.validate(model).map_err(|e| {
        SolverError::InvalidArgument(format!("policy does not fit the model: {e}"))
    })?;
    let params = model.params();
    let d = params.d;
    // j ranges over 2..=delta_max - d; i over 1..j.
    let max_j = params.delta_max - d;
    let mut taus: Vec<u32> = Vec::new();
    for i in 1..max_j {
        let mut last_switch = None;
        let mut first_skip = None;
        for u in 1..d {
            let j = i + u;
            if j > max_j {
                break;
            }
            let s = UniformState::new(j + d - 1, u, 1);
            let w = policy.lookup(model, &s).expect("state inside the model");
            if w.is_switch() {
                if let Some(skip_at) = first_skip {
                    return Err(SolverError::NotThresholdForm { i, switch_at: j, skip_at });
                }
                last_switch = Some(j);
            } else if first_skip.is_none() {
                first_skip = Some(j);
            }
        }
        if let Some(j) = last_switch {
            // slots between the previous switching i and this one never preempt
            while (taus.len() as u32) + 1 < i {
                let idle_i = taus.len() as u32 + 1;
                taus.push(idle_i);
            }
            taus.push(j);
        }
    }
    // A row that preempts for every j up to i + d - 1 has no binding
    // threshold; any tau_i >= i + d - 1 encodes it. Take the smallest value
    // that keeps the sequence non-increasing.
    for k in (0..taus.len().saturating_sub(1)).rev() {
        let i = k as u32 + 1;
        if taus[k] == i + d - 1 {
            taus[k] = taus[k].max(taus[k + 1]);
        }
    }
    ThresholdSummary::new(taus)
}
