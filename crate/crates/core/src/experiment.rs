//! Parameter sweeps and policy maps shared by the CLI and the web demo.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::{SimError, SolverError};
use crate::mdp::Mdp;
use crate::nonuniform::{NonUniformModel, NonUniformParams, NonUniformState, SizeDistribution};
use crate::policy::{PolicyKind, Tabular};
use crate::simulator::{paired_std_error, simulate, SimConfig, SimStats, Sizes};
use crate::solver::{structured_vi_nonuniform, structured_vi_uniform, PolicyTable, Solution};
use crate::uniform::{UniformModel, UniformParams, UniformState};

/// Environment variable holding the sweep worker count (unset or 0: one per core).
pub const WORKERS_ENV: &str = "PREEMPT_AOI_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid sweep: {0}")]
    Config(String),
}

impl From<crate::error::ModelError> for ExperimentError {
    fn from(e: crate::error::ModelError) -> Self {
        ExperimentError::Solver(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SweepModel {
    Uniform { d: u32 },
    Nonuniform { sizes: SizeDistribution },
}

impl SweepModel {
    fn sizes(&self) -> Sizes {
        match self {
            SweepModel::Uniform { d } => Sizes::Constant(*d),
            SweepModel::Nonuniform { sizes } => Sizes::Distribution(sizes.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: SweepModel,
    pub grid: Vec<f64>,
    pub delta_max: u32,
    pub iters: usize,
    pub tol: f64,
    pub horizon: u64,
    pub seeds: Vec<u64>,
}

/// One sweep point. Simulated values are averages over the seeds and
/// `se_*` their standard errors. All policies see the same arrivals, so
/// `se_gap` (skip minus optimal) and `se_gap_switch` (switch minus optimal)
/// come from paired batch means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    #[serde(rename = "J_opt")]
    pub j_opt: f64,
    pub sim_opt: f64,
    pub sim_skip: f64,
    pub sim_switch: f64,
    pub gap_skip_minus_opt: f64,
    pub se_opt: f64,
    pub se_skip: f64,
    pub se_switch: f64,
    pub se_gap: f64,
    pub se_gap_switch: f64,
}

/// Solves the uniform model and wraps the result as a simulator policy.
/// Fails on non-convergence.
pub fn optimal_uniform(
    params: UniformParams,
    iters: usize,
    tol: f64,
) -> Result<(PolicyKind, Solution), SolverError> {
    let model = UniformModel::new(params)?;
    let sol = structured_vi_uniform(&model, iters, tol)?;
    sol.ensure_converged(tol)?;
    let policy = Tabular::new(model, sol.policy.clone()).expect("solver tables fit their model");
    Ok((PolicyKind::TabularUniform(policy), sol))
}

pub fn optimal_nonuniform(
    params: NonUniformParams,
    iters: usize,
    tol: f64,
) -> Result<(PolicyKind, Solution), SolverError> {
    let model = NonUniformModel::new(params)?;
    let sol = structured_vi_nonuniform(&model, iters, tol)?;
    sol.ensure_converged(tol)?;
    let policy = Tabular::new(model, sol.policy.clone()).expect("solver tables fit their model");
    Ok((PolicyKind::TabularNonUniform(policy), sol))
}

/// Runs `f` on a pool sized from [`WORKERS_ENV`].
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let workers = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

struct Runs {
    stats: Vec<SimStats>,
}

impl Runs {
    fn new(policy: &PolicyKind, base: &SimConfig, seeds: &[u64]) -> Result<Self, SimError> {
        let stats = seeds
            .iter()
            .map(|&seed| simulate(policy, &SimConfig { seed, ..base.clone() }))
            .collect::<Result<_, _>>()?;
        Ok(Runs { stats })
    }

    fn n(&self) -> f64 {
        self.stats.len() as f64
    }

    fn mean(&self) -> f64 {
        self.stats.iter().map(|s| s.time_avg_aoi).sum::<f64>() / self.n()
    }

    fn se(&self) -> f64 {
        let var: f64 = self.stats.iter().map(|s| s.std_error.unwrap_or(f64::NAN).powi(2)).sum();
        var.sqrt() / self.n()
    }

    /// Standard error of `mean(other) - mean(self)` using paired batch means.
    fn paired_se(&self, other: &Runs) -> f64 {
        let var: f64 = self
            .stats
            .iter()
            .zip(&other.stats)
            .map(|(a, b)| paired_std_error(b, a).unwrap_or(f64::NAN).powi(2))
            .sum();
        var.sqrt() / self.n()
    }
}

fn sweep_point(cfg: &SweepConfig, p: f64) -> Result<SweepRow, ExperimentError> {
    let (opt, sol) = match &cfg.model {
        SweepModel::Uniform { d } => {
            optimal_uniform(UniformParams::new(*d, p, cfg.delta_max)?, cfg.iters, cfg.tol)?
        }
        SweepModel::Nonuniform { sizes } => optimal_nonuniform(
            NonUniformParams::new(p, sizes.clone(), cfg.delta_max)?,
            cfg.iters,
            cfg.tol,
        )?,
    };
    let base = SimConfig {
        horizon: cfg.horizon,
        seed: 0,
        p,
        sizes: cfg.model.sizes(),
        record_trace: false,
    };
    let opt = Runs::new(&opt, &base, &cfg.seeds)?;
    let skip = Runs::new(&PolicyKind::AlwaysSkip, &base, &cfg.seeds)?;
    let switch = Runs::new(&PolicyKind::AlwaysSwitch, &base, &cfg.seeds)?;
    Ok(SweepRow {
        p,
        j_opt: sol.gain(),
        sim_opt: opt.mean(),
        sim_skip: skip.mean(),
        sim_switch: switch.mean(),
        gap_skip_minus_opt: skip.mean() - opt.mean(),
        se_opt: opt.se(),
        se_skip: skip.se(),
        se_switch: switch.se(),
        se_gap: opt.paired_se(&skip),
        se_gap_switch: opt.paired_se(&switch),
    })
}

/// Solves and simulates every grid point in parallel; rows keep grid order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    if cfg.grid.is_empty() {
        return Err(ExperimentError::Config("grid is empty".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(ExperimentError::Config("at least one seed is required".into()));
    }
    with_workers(|| cfg.grid.par_iter().map(|&p| sweep_point(cfg, p)).collect())
}

/// `start, start + step, ...` up to `end` inclusive, rounded to 1e-9.
pub fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

pub fn write_csv<T: Serialize, W: io::Write>(rows: &[T], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformMapCell {
    pub delta: u32,
    pub u: u32,
    pub action: Action,
}

/// Action at every `(delta, u, 1)` with `delta <= delta_hi`.
pub fn uniform_policy_map(
    model: &UniformModel,
    policy: &PolicyTable,
    delta_hi: u32,
) -> Vec<UniformMapCell> {
    let params = model.params();
    (params.d..=delta_hi.min(params.delta_max))
        .flat_map(|delta| (0..params.d).map(move |u| (delta, u)))
        .map(|(delta, u)| UniformMapCell {
            delta,
            u,
            action: policy.action(model.arrival_index(delta, u)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochMapCell {
    pub i: u32,
    pub j: u32,
    pub action: Action,
}

/// Action for an update that arrived in epoch slot `i` when the next one
/// arrives in slot `j`, for `i < j <= min(i + d - 1, j_hi)`.
pub fn epoch_policy_map(model: &UniformModel, policy: &PolicyTable, j_hi: u32) -> Vec<EpochMapCell> {
    let d = model.params().d;
    let j_hi = j_hi.min(model.params().delta_max - d);
    let mut cells = Vec::new();
    for i in 1..j_hi {
        for j in i + 1..=(i + d - 1).min(j_hi) {
            let s = UniformState::new(j + d - 1, j - i, 1);
            let action = policy.lookup(model, &s).expect("state inside the model");
            cells.push(EpochMapCell { i, j, action });
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonUniformMapCell {
    pub c: u32,
    pub b: u32,
    pub delta: u32,
    pub l: u32,
    pub action: Action,
    /// `delta >= delta_min + c - l`; other states cannot occur on a trajectory.
    pub reachable: bool,
}

/// Action at every busy state with an arrival and `delta <= delta_hi`,
/// ordered by `(c, b)` panel.
pub fn nonuniform_policy_map(
    model: &NonUniformModel,
    policy: &PolicyTable,
    delta_hi: u32,
) -> Vec<NonUniformMapCell> {
    let params = model.params();
    let support = params.sizes.support();
    let mut cells = Vec::new();
    for &c in support {
        for &b in support {
            for delta in params.delta_min()..=delta_hi.min(params.delta_max) {
                for l in 1..c {
                    let s = NonUniformState::new(delta, l, c, b);
                    if let Some(i) = model.index_of(&s) {
                        let reachable = delta + l >= params.delta_min() + c;
                        cells.push(NonUniformMapCell {
                            c,
                            b,
                            delta,
                            l,
                            action: policy.action(i),
                            reachable,
                        });
                    }
                }
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive_and_rounded() {
        let g = grid(0.01, 0.3, 0.01);
        assert_eq!(g.len(), 30);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[6], 0.07);
        assert_eq!(*g.last().unwrap(), 0.3);
    }

    #[test]
    fn sweep_rows_keep_grid_order() {
        let cfg = SweepConfig {
            model: SweepModel::Uniform { d: 3 },
            grid: vec![0.4, 0.1, 0.25],
            delta_max: 30,
            iters: 10_000,
            tol: 1e-8,
            horizon: 2_000,
            seeds: vec![1, 2],
        };
        let rows = run_sweep(&cfg).unwrap();
        let ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
        assert_eq!(ps, cfg.grid);
        assert_eq!(rows, run_sweep(&cfg).unwrap());
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert_eq!(
            header,
            "p,J_opt,sim_opt,sim_skip,sim_switch,gap_skip_minus_opt,se_opt,se_skip,se_switch,se_gap,se_gap_switch"
        );
    }

    #[test]
    fn epoch_map_covers_service_window() {
        let model = UniformModel::new(UniformParams::new(4, 0.2, 20).unwrap()).unwrap();
        let policy = PolicyTable::from_fn(&model, |_| Action::Skip);
        let cells = epoch_policy_map(&model, &policy, 6);
        // i = 1..5, j up to min(i + 3, 6)
        assert_eq!(cells.len(), 3 + 3 + 3 + 2 + 1);
        assert!(cells.iter().all(|c| c.j > c.i && c.j <= c.i + 3));
    }
}
