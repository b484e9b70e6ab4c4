//! Slot-level simulation of the link under any [`PolicyKind`].
//!
//! Each slot: draw the arrival (and its size), ask the policy, charge the
//! AoI at the start of the slot, then advance. A delivery at the end of slot
//! `t` sets the AoI of slot `t + 1` to the delivered update's size; epoch `n`
//! ends at the delivery instant `S_n = t + 1`.
//!
//! Randomness comes from ChaCha8 seeded with `seed`: stream 0 draws the
//! arrivals and stream 1 the sizes, so changing the size law leaves the
//! arrival pattern untouched. Constant sizes consume nothing from stream 1.
//!
//! The AoI is not truncated here; tabular policies clamp it themselves.

use std::io;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::SimError;
use crate::nonuniform::{NonUniformState, SizeDistribution};
use crate::policy::{Observation, PolicyKind};
use crate::uniform::UniformState;

pub const ARRIVAL_STREAM: u64 = 0;
pub const SIZE_STREAM: u64 = 1;

/// Number of equal batches the horizon is split into for batch means.
pub const BATCHES: u64 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sizes {
    Constant(u32),
    Distribution(SizeDistribution),
}

impl Sizes {
    pub fn min_size(&self) -> u32 {
        match self {
            Sizes::Constant(d) => *d,
            Sizes::Distribution(f) => f.min_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: u64,
    pub seed: u64,
    pub p: f64,
    pub sizes: Sizes,
    #[serde(default)]
    pub record_trace: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 {
            return Err(SimError::InvalidConfig("horizon must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(SimError::InvalidConfig(format!(
                "arrival probability must lie in [0, 1], got {}",
                self.p
            )));
        }
        if let Sizes::Constant(d) = self.sizes {
            if d < 2 {
                return Err(SimError::InvalidConfig(format!("update size must be >= 2, got {d}")));
            }
        }
        Ok(())
    }
}

/// One inter-delivery interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    /// `X_n`.
    pub length: u64,
    /// AoI in the first slot of the epoch.
    pub start_aoi: u64,
    /// Transmission time of the update delivered at the end of the epoch.
    pub delivered_size: u32,
    /// Per-slot AoI sum over the epoch.
    pub aoi_sum: u64,
}

impl Epoch {
    /// `X start + X (X - 1) / 2`, which `aoi_sum` must equal.
    pub fn expected_aoi_sum(&self) -> u64 {
        self.length * self.start_aoi + self.length * (self.length - 1) / 2
    }
}

/// One simulated slot. `u_or_l` is the in-service age `u` for uniform
/// observations and the remaining time `l` otherwise; `b` is 0 without an
/// arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub delta: u64,
    pub u_or_l: u32,
    pub c: u32,
    pub b: u32,
    pub action: Action,
    #[serde(with = "flag")]
    pub delivered: bool,
}

mod flag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(u8::deserialize(d)? != 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub horizon: u64,
    pub time_avg_aoi: f64,
    /// `sum_t delta_t`.
    pub cumulative_aoi: f64,
    /// Cumulative AoI when every slot is charged half a slot more, i.e. the
    /// `(2d + X) X / 2` epoch convention: `cumulative_aoi + horizon / 2`.
    pub continuous_aoi: f64,
    /// `N(T)`.
    pub delivered: u64,
    pub epochs: Vec<Epoch>,
    pub arrivals: u64,
    /// Preemptions of an update in service.
    pub switches: u64,
    /// Arrivals dropped while busy.
    pub skips: u64,
    /// Arrivals taken up while idle.
    pub starts: u64,
    /// Arrivals dropped while idle.
    pub idle_skips: u64,
    /// Regenerative (ratio-estimator) standard error of `time_avg_aoi`;
    /// `None` with fewer than two complete epochs.
    pub std_error: Option<f64>,
    /// Average AoI over each of `min(BATCHES, horizon)` consecutive batches
    /// (the last one absorbs the remainder).
    pub batch_means: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<TraceRow>>,
}

impl SimStats {
    pub fn continuous_time_avg_aoi(&self) -> f64 {
        self.continuous_aoi / self.horizon as f64
    }
}

enum View {
    Uniform(u32),
    NonUniform,
}

fn view_for(policy: &PolicyKind, sizes: &Sizes) -> Result<View, SimError> {
    match (policy, sizes) {
        (PolicyKind::TabularUniform(t), Sizes::Constant(d)) => {
            let model_d = t.model().params().d;
            if model_d != *d {
                return Err(SimError::Incompatible(format!(
                    "policy is for d = {model_d}, simulation uses d = {d}"
                )));
            }
            Ok(View::Uniform(*d))
        }
        (PolicyKind::Threshold { d: td, .. }, Sizes::Constant(d)) => {
            if td != d {
                return Err(SimError::Incompatible(format!(
                    "thresholds are for d = {td}, simulation uses d = {d}"
                )));
            }
            Ok(View::Uniform(*d))
        }
        (PolicyKind::TabularUniform(_) | PolicyKind::Threshold { .. }, Sizes::Distribution(_)) => {
            Err(SimError::Incompatible("uniform policies require a constant size".into()))
        }
        (PolicyKind::TabularNonUniform(t), sizes) => {
            let support = t.model().params().sizes.support();
            let ok = match sizes {
                Sizes::Constant(d) => support.contains(d),
                Sizes::Distribution(f) => f.support().iter().all(|b| support.contains(b)),
            };
            if !ok {
                return Err(SimError::Incompatible(format!(
                    "simulated sizes fall outside the policy's support {support:?}"
                )));
            }
            Ok(View::NonUniform)
        }
        (_, Sizes::Constant(d)) => Ok(View::Uniform(*d)),
        (_, Sizes::Distribution(_)) => Ok(View::NonUniform),
    }
}

/// Runs `policy` for `cfg.horizon` slots starting idle with AoI equal to the
/// smallest update size.
pub fn simulate(policy: &PolicyKind, cfg: &SimConfig) -> Result<SimStats, SimError> {
    cfg.validate()?;
    let view = view_for(policy, &cfg.sizes)?;
    let mut arrivals_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    arrivals_rng.set_stream(ARRIVAL_STREAM);
    let mut sizes_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sizes_rng.set_stream(SIZE_STREAM);
    let size_law = match &cfg.sizes {
        Sizes::Constant(_) => None,
        Sizes::Distribution(f) => Some((
            f.support().to_vec(),
            WeightedIndex::new(f.probs()).map_err(|e| SimError::InvalidConfig(e.to_string()))?,
        )),
    };

    let mut delta = cfg.sizes.min_size() as u64;
    // remaining slots and size of the update in service; 0 when idle
    let (mut l, mut c) = (0u32, 0u32);
    let mut cumulative = 0u64;
    let mut epoch_start = 0u64;
    let mut epoch_start_aoi = delta;
    let mut epoch_sum = 0u64;
    let mut stats = SimStats {
        horizon: cfg.horizon,
        time_avg_aoi: 0.0,
        cumulative_aoi: 0.0,
        continuous_aoi: 0.0,
        delivered: 0,
        epochs: Vec::new(),
        arrivals: 0,
        switches: 0,
        skips: 0,
        starts: 0,
        idle_skips: 0,
        std_error: None,
        batch_means: Vec::new(),
        trace: None,
    };
    let batches = BATCHES.min(cfg.horizon);
    let batch_len = cfg.horizon / batches;
    let mut batch_sum = 0u64;
    let mut trace = Vec::new();

    for t in 0..cfg.horizon {
        let arrival = arrivals_rng.random_bool(cfg.p);
        let b = match (&cfg.sizes, &size_law, arrival) {
            (_, _, false) => 0,
            (Sizes::Constant(d), _, true) => *d,
            (_, Some((support, law)), true) => support[law.sample(&mut sizes_rng)],
            (Sizes::Distribution(_), None, true) => unreachable!(),
        };
        let obs = match view {
            View::Uniform(d) => Observation::Uniform(UniformState::new(
                delta.min(u32::MAX as u64) as u32,
                if c == 0 { 0 } else { d - l },
                arrival as u8,
            )),
            View::NonUniform => Observation::NonUniform(NonUniformState::new(
                delta.min(u32::MAX as u64) as u32,
                l,
                c,
                b,
            )),
        };
        let w = policy.decide(&obs)?;
        if w.is_switch() && !arrival {
            return Err(SimError::Policy(crate::error::PolicyError::Model(
                crate::error::ModelError::SwitchWithoutArrival,
            )));
        }
        let idle = c == 0;
        if arrival {
            stats.arrivals += 1;
            match (idle, w) {
                (true, Action::Switch) => stats.starts += 1,
                (true, Action::Skip) => stats.idle_skips += 1,
                (false, Action::Switch) => stats.switches += 1,
                (false, Action::Skip) => stats.skips += 1,
            }
        }

        cumulative += delta;
        epoch_sum += delta;
        batch_sum += delta;
        let batch = stats.batch_means.len() as u64;
        if batch + 1 < batches && t + 1 == (batch + 1) * batch_len {
            stats.batch_means.push(batch_sum as f64 / batch_len as f64);
            batch_sum = 0;
        }
        let u_or_l = match (&view, idle) {
            (_, true) => 0,
            (View::Uniform(d), false) => d - l,
            (View::NonUniform, false) => l,
        };
        let row_delta = delta;
        let row_c = c;

        let mut delivered = false;
        if w.is_switch() {
            l = b - 1;
            c = b;
            delta += 1;
        } else if l == 1 {
            stats.epochs.push(Epoch {
                length: t + 1 - epoch_start,
                start_aoi: epoch_start_aoi,
                delivered_size: c,
                aoi_sum: epoch_sum,
            });
            stats.delivered += 1;
            delivered = true;
            delta = c as u64;
            l = 0;
            c = 0;
            epoch_start = t + 1;
            epoch_start_aoi = delta;
            epoch_sum = 0;
        } else {
            l = l.saturating_sub(1);
            delta += 1;
        }

        if cfg.record_trace {
            trace.push(TraceRow {
                t,
                delta: row_delta,
                u_or_l,
                c: row_c,
                b,
                action: w,
                delivered,
            });
        }
    }

    let last_len = cfg.horizon - (batches - 1) * batch_len;
    stats.batch_means.push(batch_sum as f64 / last_len as f64);
    stats.cumulative_aoi = cumulative as f64;
    stats.time_avg_aoi = cumulative as f64 / cfg.horizon as f64;
    stats.continuous_aoi = cumulative as f64 + cfg.horizon as f64 / 2.0;
    stats.std_error = regenerative_std_error(&stats.epochs);
    if cfg.record_trace {
        stats.trace = Some(trace);
    }
    Ok(stats)
}

/// Standard error of the ratio estimator `sum R_n / sum X_n` over complete
/// epochs.
pub fn regenerative_std_error(epochs: &[Epoch]) -> Option<f64> {
    let n = epochs.len();
    if n < 2 {
        return None;
    }
    let total_r: f64 = epochs.iter().map(|e| e.aoi_sum as f64).sum();
    let total_x: f64 = epochs.iter().map(|e| e.length as f64).sum();
    let ratio = total_r / total_x;
    let mean_x = total_x / n as f64;
    let ss: f64 = epochs
        .iter()
        .map(|e| (e.aoi_sum as f64 - ratio * e.length as f64).powi(2))
        .sum();
    let var = ss / (n as f64 - 1.0);
    Some((var / n as f64).sqrt() / mean_x)
}

/// Standard error of the mean difference `a - b` of two runs over the same
/// horizon, from their paired batch means. `None` with fewer than two batches.
pub fn paired_std_error(a: &SimStats, b: &SimStats) -> Option<f64> {
    let n = a.batch_means.len();
    if n < 2 || n != b.batch_means.len() {
        return None;
    }
    let diffs: Vec<f64> = a.batch_means.iter().zip(&b.batch_means).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Some((var / n as f64).sqrt())
}

/// Splits a trace at its delivery slots. Slots after the last delivery form
/// no epoch.
pub fn epoch_decompose(trace: &[TraceRow]) -> Vec<Epoch> {
    let mut epochs = Vec::new();
    let mut start = 0usize;
    for (k, row) in trace.iter().enumerate() {
        if row.delivered {
            let slots = &trace[start..=k];
            epochs.push(Epoch {
                length: slots.len() as u64,
                start_aoi: slots[0].delta,
                delivered_size: row.c,
                aoi_sum: slots.iter().map(|r| r.delta).sum(),
            });
            start = k + 1;
        }
    }
    epochs
}

/// Counts of sequential-switching violations (a switch after a skip in the
/// same epoch) and idle-rule violations (an idle arrival not taken up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrajectoryCheck {
    pub ss_violations: u64,
    pub idle_violations: u64,
}

pub fn check_trajectory(trace: &[TraceRow]) -> TrajectoryCheck {
    let mut check = TrajectoryCheck::default();
    let mut skipped = false;
    for row in trace {
        let idle = row.c == 0;
        match (row.b != 0, idle, row.action) {
            (true, true, Action::Skip) => check.idle_violations += 1,
            (true, false, Action::Skip) => skipped = true,
            (true, false, Action::Switch) if skipped => check.ss_violations += 1,
            _ => {}
        }
        if row.delivered {
            skipped = false;
        }
    }
    check
}

pub const TRACE_HEADER: [&str; 7] = ["t", "delta", "u_or_l", "c", "b", "action", "delivered"];

/// Writes the trace as CSV with a header row.
pub fn write_trace_csv<W: io::Write>(trace: &[TraceRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
