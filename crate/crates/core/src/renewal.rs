//! Exact renewal-reward evaluation of sequential-switching threshold
//! policies under a uniform transmission time `d`.
//!
//! An epoch starts idle right after a delivery. The first arrival (slot
//! `i_1`, geometric on `{1, 2, ...}`) is always transmitted. While an update
//! that arrived in slot `i` is in service, the next arrival in slot `j`
//! preempts it iff `i <= K` and `j <= tau_i` (and `j <= i + d - 1`, i.e. the
//! update is still in service). Once an arrival is skipped, the update in
//! service is delivered in slot `i + d - 1`, which ends the epoch with length
//! `X = i + d - 1`.
//!
//! With a per-slot AoI sum of `X d + X (X - 1) / 2` over an epoch, the
//! long-run average AoI is `d + E[X^2] / (2 E[X]) - 1/2` (discrete
//! convention) or `d + E[X^2] / (2 E[X])` when each epoch is charged
//! `(2d + X) X / 2`.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::solver::ThresholdSummary;

/// First two moments of the epoch length and the implied average AoI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalMoments {
    pub d: u32,
    pub mean_x: f64,
    pub mean_x2: f64,
}

impl RenewalMoments {
    /// Average AoI with per-slot accounting (matches the MDP gain).
    pub fn avg_aoi(&self) -> f64 {
        self.avg_aoi_continuous() - 0.5
    }

    /// Average AoI when each epoch is charged `(2d + X) X / 2`.
    pub fn avg_aoi_continuous(&self) -> f64 {
        self.d as f64 + self.mean_x2 / (2.0 * self.mean_x)
    }
}

fn check(p: f64, d: u32) -> Result<(), ModelError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(ModelError::InvalidParams(format!(
            "arrival probability must lie in (0, 1], got {p}"
        )));
    }
    if d < 2 {
        return Err(ModelError::InvalidParams(format!("d must be >= 2, got {d}")));
    }
    Ok(())
}

/// Moments of `G + offset` for `G` geometric on `{1, 2, ...}` with success
/// probability `p`: `E[G] = 1/p`, `E[G^2] = (2 - p) / p^2`.
fn shifted_geometric(p: f64, offset: f64) -> (f64, f64) {
    let m1 = 1.0 / p;
    let m2 = (2.0 - p) / (p * p);
    (m1 + offset, m2 + 2.0 * offset * m1 + offset * offset)
}

/// Never preempt: `X = W + d - 1` with `W` geometric.
pub fn always_skip_moments(p: f64, d: u32) -> Result<RenewalMoments, ModelError> {
    check(p, d)?;
    let (mean_x, mean_x2) = shifted_geometric(p, (d - 1) as f64);
    Ok(RenewalMoments { d, mean_x, mean_x2 })
}

/// Exact moments under the threshold policy `taus`.
///
/// For `i <= K` the conditional moments `m_k(i) = E[X^k | in service since i]`
/// satisfy
/// `m_k(i) = sum_{g=1}^{L_i - i} p (1-p)^(g-1) m_k(i+g) + (1-p)^(L_i - i) (i+d-1)^k`
/// with `L_i = min(tau_i, i + d - 1)`, and `m_k(i) = (i+d-1)^k` for `i > K`.
/// The first-arrival tail beyond `K` is summed in closed form.
pub fn threshold_policy_moments(
    p: f64,
    d: u32,
    taus: &ThresholdSummary,
) -> Result<RenewalMoments, ModelError> {
    check(p, d)?;
    let k = taus.k() as usize;
    if k == 0 {
        return always_skip_moments(p, d);
    }
    let q = 1.0 - p;
    let last = |i: usize| (i + d as usize - 1) as f64;
    // conditional moments for i = 1..=K + d (index i), beyond K closed form
    let horizon = k + d as usize;
    let mut m1 = vec![0.0; horizon + 1];
    let mut m2 = vec![0.0; horizon + 1];
    for i in (1..=horizon).rev() {
        let x = last(i);
        let limit = match taus.tau(i as u32) {
            Some(tau) => (tau as usize).min(i + d as usize - 1),
            None => i,
        };
        let (mut a1, mut a2) = (0.0, 0.0);
        let mut reach = 1.0; // (1-p)^(g-1)
        for j in i + 1..=limit {
            a1 += p * reach * m1[j];
            a2 += p * reach * m2[j];
            reach *= q;
        }
        m1[i] = a1 + reach * x;
        m2[i] = a2 + reach * x * x;
    }

    let (mut e1, mut e2) = (0.0, 0.0);
    let mut reach = 1.0; // (1-p)^(i-1)
    for i in 1..=k {
        e1 += p * reach * m1[i];
        e2 += p * reach * m2[i];
        reach *= q;
    }
    // i = K + g, g >= 1: X = g + K + d - 1
    let (t1, t2) = shifted_geometric(p, (k + d as usize - 1) as f64);
    e1 += reach * t1;
    e2 += reach * t2;
    Ok(RenewalMoments { d, mean_x: e1, mean_x2: e2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn always_skip_closed_form() {
        let m = always_skip_moments(0.5, 2).unwrap();
        assert_relative_eq!(m.mean_x, 3.0, epsilon = 1e-12);
        assert_relative_eq!(m.mean_x2, 11.0, epsilon = 1e-12);
        assert_relative_eq!(m.avg_aoi_continuous(), 2.0 + 11.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn always_skip_by_direct_summation() {
        // sum over W = w with P = p (1-p)^(w-1), truncated where the tail is negligible
        let (p, d) = (0.5, 2u32);
        let (mut s1, mut s2, mut pr) = (0.0, 0.0, p);
        for w in 1..=200u32 {
            let x = (w + d - 1) as f64;
            s1 += pr * x;
            s2 += pr * x * x;
            pr *= 1.0 - p;
        }
        let m = always_skip_moments(p, d).unwrap();
        assert_relative_eq!(m.mean_x, s1, epsilon = 1e-12);
        assert_relative_eq!(m.mean_x2, s2, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_limit() {
        let m = always_skip_moments(1.0, 7).unwrap();
        assert_relative_eq!(m.mean_x, 7.0);
        assert_relative_eq!(m.avg_aoi_continuous(), 7.0 + 3.5);
    }

    #[test]
    fn empty_thresholds_match_always_skip() {
        let a = threshold_policy_moments(0.13, 6, &ThresholdSummary::empty()).unwrap();
        let b = always_skip_moments(0.13, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(always_skip_moments(0.0, 5).is_err());
        assert!(always_skip_moments(0.5, 1).is_err());
    }
}
