//! Age-of-information (AoI) minimization on a rate-limited link.
//!
//! Updates arrive at a source according to a Bernoulli process and take
//! several slots to transmit. When an update arrives while another one is
//! in service, the source either *skips* the new arrival or *switches* to it
//! (dropping the unfinished update). This crate provides:
//!
//! * the two slotted MDP models ([`uniform`] for a fixed transmission time,
//!   [`nonuniform`] for sizes drawn from a bounded PMF),
//! * plain and structured relative value iteration, discounted value
//!   iteration, policy evaluation and threshold extraction ([`solver`]),
//! * the policy interface and the two baselines ([`policy`]),
//! * a seeded slot-level simulator ([`simulator`]),
//! * an exact renewal-reward oracle for threshold policies ([`renewal`]),
//! * sweep and policy-map drivers shared by the CLI and the web demo
//!   ([`experiment`]).

pub mod action;
pub mod error;
pub mod experiment;
pub mod mdp;
pub mod nonuniform;
pub mod policy;
pub mod renewal;
pub mod simulator;
pub mod solver;
pub mod uniform;

pub use action::{Action, ActionSet};
pub use error::{ModelError, PolicyError, SimError, SolverError};
pub use mdp::{Kernel, Mdp};
pub use nonuniform::{NonUniformModel, NonUniformParams, NonUniformState, SizeDistribution};
pub use policy::{Observation, PolicyDocument, PolicyKind, Tabular};
pub use renewal::RenewalMoments;
pub use simulator::{epoch_decompose, simulate, Epoch, SimConfig, SimStats, Sizes, TraceRow};
pub use solver::{PolicyTable, Solution, ThresholdSummary, ValueFunction};
pub use uniform::{UniformModel, UniformParams, UniformState};

/// Tolerance under which two Q-values count as tied; ties resolve to skip.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Default span tolerance for relative value iteration.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default iteration cap, as used for the published threshold maps.
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Default AoI truncation cap.
pub const DEFAULT_DELTA_MAX: u32 = 1000;
