use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use preempt_aoi::experiment::{
    epoch_policy_map, grid, nonuniform_policy_map, optimal_nonuniform, optimal_uniform, run_sweep,
    uniform_policy_map, write_csv, ExperimentError, SweepConfig, SweepModel,
};
use preempt_aoi::simulator::write_trace_csv;
use preempt_aoi::solver::{
    check_nonuniform_structure, check_uniform_structure, extract_thresholds, NonUniformStructure,
    UniformStructure,
};
use preempt_aoi::*;
use serde::Serialize;

const DEFAULT_HORIZON: u64 = 10_000;

#[derive(Parser)]
#[command(name = "preempt-aoi", version, about = "Skip/switch AoI policies: solve, simulate, sweep")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_DELTA_MAX)]
    delta_max: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    iters: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the constant-size model and extract its thresholds.
    SolveUniform {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        d: u32,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the random-size model and check its structural properties.
    SolveNonuniform {
        #[arg(long)]
        p: f64,
        /// Size distribution, e.g. "5:0.5,8:0.5".
        #[arg(long)]
        sizes: SizeDistribution,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a stored policy.
    Simulate {
        /// Policy JSON written by a solve command (or a threshold/baseline document).
        #[arg(long)]
        policy: PathBuf,
        #[arg(long = "T", default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Arrival probability; required unless the policy document carries it.
        #[arg(long)]
        p: Option<f64>,
        /// Update sizes as "d" or "5:0.5,8:0.5"; required for baseline policies.
        #[arg(long)]
        sizes: Option<String>,
        /// Per-slot trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Stats JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and simulate the optimal policy and both baselines over a grid of p.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: SweepOverrides,
        /// CSV output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the CSV data behind a figure.
    Figure {
        #[arg(long, value_enum)]
        which: Figure,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: SweepOverrides,
    },
}

#[derive(clap::Args, Clone, Default)]
struct SweepOverrides {
    #[arg(long, conflicts_with = "sizes")]
    d: Option<u32>,
    #[arg(long)]
    sizes: Option<SizeDistribution>,
    /// "start:end:step" or a comma-separated list of p values.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    delta_max: Option<u32>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    #[value(name = "2a")]
    PolicyMap,
    #[value(name = "2b")]
    EpochMap,
    #[value(name = "5")]
    NonUniformMap,
    #[value(name = "3")]
    AoiVsP,
    #[value(name = "4")]
    GapVsP,
    #[value(name = "6")]
    NonUniformSweep,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("I/O error on {path}: {msg}")]
    Io { path: String, msg: String },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |e| CliError::Io { path: path.display().to_string(), msg: e.to_string() }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Solver(s) => s.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("preempt-aoi: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::SolveUniform { p, d, solver, out } => solve_uniform(p, d, &solver, &out),
        Command::SolveNonuniform { p, sizes, solver, out } => solve_nonuniform(p, sizes, &solver, &out),
        Command::Simulate { policy, horizon, seed, p, sizes, trace, out } => {
            simulate_cmd(&policy, horizon, seed, p, sizes.as_deref(), trace.as_deref(), out.as_deref())
        }
        Command::Sweep { config, overrides, out } => {
            let base = match config {
                Some(path) => read_json(&path)?,
                None => default_sweep(SweepModel::Uniform { d: 10 }),
            };
            let cfg = apply_overrides(base, &overrides)?;
            let rows = run_sweep(&cfg)?;
            emit_csv(&rows, out.as_deref())
        }
        Command::Figure { which, out, overrides } => figure(which, &out, &overrides),
    }
}

fn default_sweep(model: SweepModel) -> SweepConfig {
    SweepConfig {
        model,
        grid: grid(0.01, 0.30, 0.01),
        delta_max: DEFAULT_DELTA_MAX,
        iters: DEFAULT_MAX_ITERS,
        tol: DEFAULT_TOL,
        horizon: DEFAULT_HORIZON,
        seeds: vec![1],
    }
}

fn apply_overrides(mut cfg: SweepConfig, o: &SweepOverrides) -> Result<SweepConfig> {
    if let Some(d) = o.d {
        cfg.model = SweepModel::Uniform { d };
    }
    if let Some(sizes) = &o.sizes {
        cfg.model = SweepModel::Nonuniform { sizes: sizes.clone() };
    }
    if let Some(g) = &o.grid {
        cfg.grid = parse_grid(g)?;
    }
    cfg.delta_max = o.delta_max.unwrap_or(cfg.delta_max);
    cfg.iters = o.iters.unwrap_or(cfg.iters);
    cfg.tol = o.tol.unwrap_or(cfg.tol);
    cfg.horizon = o.horizon.unwrap_or(cfg.horizon);
    if let Some(seeds) = &o.seeds {
        cfg.seeds = seeds.clone();
    }
    if cfg.grid.is_empty() {
        return Err(CliError::Config("grid is empty".into()));
    }
    Ok(cfg)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |_| CliError::Config(format!("cannot parse grid {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|x| x.trim().parse()).collect::<std::result::Result<_, _>>().map_err(bad)?;
        if !(v[2] > 0.0) || v[1] < v[0] {
            return Err(CliError::Config(format!("grid {s:?} needs start <= end and step > 0")));
        }
        return Ok(grid(v[0], v[1], v[2]));
    }
    s.split(',').map(|x| x.trim().parse().map_err(bad)).collect()
}

#[derive(Serialize)]
struct IdleValue {
    delta: u32,
    value: f64,
}

#[derive(Serialize)]
struct UniformSummary {
    p: f64,
    d: u32,
    delta_max: u32,
    gain: f64,
    iterations: usize,
    span: f64,
    converged: bool,
    thresholds: Vec<u32>,
    structure: UniformStructure,
    value_min: f64,
    value_max: f64,
    idle_values: Vec<IdleValue>,
}

#[derive(Serialize)]
struct NonUniformSummary {
    p: f64,
    sizes: String,
    delta_max: u32,
    gain: f64,
    iterations: usize,
    span: f64,
    converged: bool,
    structure: NonUniformStructure,
    structure_ok: bool,
    value_min: f64,
    value_max: f64,
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn solve_uniform(p: f64, d: u32, s: &SolverArgs, out: &Path) -> Result<()> {
    let params = UniformParams::new(d, p, s.delta_max)?;
    let model = UniformModel::new(params)?;
    let (policy, sol) = optimal_uniform(params, s.iters, s.tol)?;
    let taus = extract_thresholds(&model, &sol.policy)?;
    let (value_min, value_max) = min_max(&sol.values.values);
    let idle_values = (d..=(d + 20).min(s.delta_max))
        .map(|delta| IdleValue {
            delta,
            value: sol.values.values[model.index_of(&UniformState::new(delta, 0, 0)).expect("idle state")],
        })
        .collect();
    let summary = UniformSummary {
        p,
        d,
        delta_max: s.delta_max,
        gain: sol.gain(),
        iterations: sol.values.iterations_run,
        span: sol.values.span,
        converged: sol.values.converged,
        thresholds: taus.taus().to_vec(),
        structure: check_uniform_structure(&model, &sol.policy),
        value_min,
        value_max,
        idle_values,
    };
    create_dir(out)?;
    write_json(&out.join("policy.json"), &PolicyDocument::from(&policy))?;
    write_json(&out.join("thresholds.json"), &summary.thresholds)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_csv_file(&out.join("policy_map.csv"), &uniform_policy_map(&model, &sol.policy, d + 40))?;
    println!("J = {:.6}  thresholds = {:?}  iterations = {}", summary.gain, summary.thresholds, summary.iterations);
    Ok(())
}

fn solve_nonuniform(p: f64, sizes: SizeDistribution, s: &SolverArgs, out: &Path) -> Result<()> {
    let params = NonUniformParams::new(p, sizes.clone(), s.delta_max)?;
    let model = NonUniformModel::new(params.clone())?;
    let (policy, sol) = optimal_nonuniform(params, s.iters, s.tol)?;
    let structure = check_nonuniform_structure(&model, &sol.policy);
    let (value_min, value_max) = min_max(&sol.values.values);
    let summary = NonUniformSummary {
        p,
        sizes: sizes.to_string(),
        delta_max: s.delta_max,
        gain: sol.gain(),
        iterations: sol.values.iterations_run,
        span: sol.values.span,
        converged: sol.values.converged,
        structure,
        structure_ok: structure.total() == 0,
        value_min,
        value_max,
    };
    create_dir(out)?;
    write_json(&out.join("policy.json"), &PolicyDocument::from(&policy))?;
    write_json(&out.join("summary.json"), &summary)?;
    let delta_hi = sizes.max_size() + 40;
    write_csv_file(&out.join("policy_map.csv"), &nonuniform_policy_map(&model, &sol.policy, delta_hi))?;
    println!(
        "J = {:.6}  structural violations = {}  iterations = {}",
        summary.gain,
        structure.total(),
        summary.iterations
    );
    Ok(())
}

fn parse_sizes(s: &str) -> Result<Sizes> {
    if let Ok(d) = s.trim().parse::<u32>() {
        return Ok(Sizes::Constant(d));
    }
    s.parse().map(Sizes::Distribution).map_err(|e: ModelError| CliError::Config(e.to_string()))
}

fn simulate_cmd(
    policy_path: &Path,
    horizon: u64,
    seed: u64,
    p: Option<f64>,
    sizes: Option<&str>,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let doc: PolicyDocument = read_json(policy_path)?;
    let (doc_p, doc_sizes) = match &doc {
        PolicyDocument::Uniform { params, .. } => (Some(params.p), Some(Sizes::Constant(params.d))),
        PolicyDocument::Nonuniform { params, .. } => {
            (Some(params.p), Some(Sizes::Distribution(params.sizes.clone())))
        }
        PolicyDocument::Threshold { params, .. } => (None, Some(Sizes::Constant(params.d))),
        _ => (None, None),
    };
    let policy = PolicyKind::try_from(doc).map_err(|e| CliError::Config(e.to_string()))?;
    let p = p.or(doc_p).ok_or_else(|| CliError::Config("--p is required for this policy".into()))?;
    let sizes = match sizes {
        Some(s) => parse_sizes(s)?,
        None => doc_sizes.ok_or_else(|| CliError::Config("--sizes is required for this policy".into()))?,
    };
    let cfg = SimConfig { horizon, seed, p, sizes, record_trace: trace.is_some() };
    let mut stats = simulate(&policy, &cfg)?;
    if let (Some(path), Some(rows)) = (trace, stats.trace.take()) {
        let file = File::create(path).map_err(CliError::io(path))?;
        write_trace_csv(&rows, BufWriter::new(file))
            .map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    }
    match out {
        Some(path) => write_json(path, &stats),
        None => {
            let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
            to_stdout(|w| writeln!(w, "{text}"))
        }
    }
}

fn figure(which: Figure, out: &Path, o: &SweepOverrides) -> Result<()> {
    let (d, p, delta_max) = (10, 0.07, o.delta_max.unwrap_or(DEFAULT_DELTA_MAX));
    let iters = o.iters.unwrap_or(DEFAULT_MAX_ITERS);
    let tol = o.tol.unwrap_or(DEFAULT_TOL);
    match which {
        Figure::PolicyMap | Figure::EpochMap => {
            let d = o.d.unwrap_or(d);
            let p = single_p(o, p)?;
            let params = UniformParams::new(d, p, delta_max)?;
            let model = UniformModel::new(params)?;
            let (_, sol) = optimal_uniform(params, iters, tol)?;
            if which == Figure::PolicyMap {
                write_csv_file(out, &uniform_policy_map(&model, &sol.policy, d + 40))
            } else {
                write_csv_file(out, &epoch_policy_map(&model, &sol.policy, 40))
            }
        }
        Figure::NonUniformMap => {
            let sizes = match &o.sizes {
                Some(s) => s.clone(),
                None => "5:0.5,8:0.5".parse()?,
            };
            let p = single_p(o, 0.14)?;
            let params = NonUniformParams::new(p, sizes.clone(), delta_max)?;
            let model = NonUniformModel::new(params.clone())?;
            let (_, sol) = optimal_nonuniform(params, iters, tol)?;
            write_csv_file(out, &nonuniform_policy_map(&model, &sol.policy, sizes.max_size() + 40))
        }
        Figure::AoiVsP | Figure::GapVsP => {
            let cfg = apply_overrides(default_sweep(SweepModel::Uniform { d }), o)?;
            write_csv_file(out, &run_sweep(&cfg)?)
        }
        Figure::NonUniformSweep => {
            let sizes = "5:0.5,8:0.5".parse()?;
            let cfg = apply_overrides(default_sweep(SweepModel::Nonuniform { sizes }), o)?;
            write_csv_file(out, &run_sweep(&cfg)?)
        }
    }
}

fn single_p(o: &SweepOverrides, default: f64) -> Result<f64> {
    match &o.grid {
        None => Ok(default),
        Some(g) => match parse_grid(g)?.as_slice() {
            [p] => Ok(*p),
            _ => Err(CliError::Config("policy-map figures take a single p in --grid".into())),
        },
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    write_csv(rows, BufWriter::new(file))
        .map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })
}

fn emit_csv<T: Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_csv_file(path, rows),
        None => to_stdout(|w| write_csv(rows, w).map_err(io::Error::from)),
    }
}

fn to_stdout(f: impl FnOnce(&mut io::StdoutLock) -> io::Result<()>) -> Result<()> {
    let mut lock = io::stdout().lock();
    match f(&mut lock).and_then(|()| lock.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err(CliError::Io { path: "stdout".into(), msg: e.to_string() })
        }
        _ => Ok(()),
    }
}
