use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("switch is not allowed without an arrival")]
    SwitchWithoutArrival,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("did not converge after {iterations} iterations (span {span:e} >= tol {tol:e})")]
    NotConverged { iterations: usize, span: f64, tol: f64 },
    #[error("invalid solver argument: {0}")]
    InvalidArgument(String),
    #[error("policy is not threshold-form in the arrival slot for in-service slot {i}: switch at j={switch_at} but skip at j={skip_at}")]
    NotThresholdForm { i: u32, switch_at: u32, skip_at: u32 },
    #[error("thresholds are not non-increasing: tau_{i}={upper} < tau_{next}={lower}", next = .i + 1)]
    NotMonotone { i: u32, upper: u32, lower: u32 },
    #[error("threshold tau_{i}={tau} is below its slot index")]
    BelowIndex { i: u32, tau: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy {kind} cannot act on a {observation} observation")]
    ObservationMismatch { kind: &'static str, observation: &'static str },
    #[error("observation does not correspond to a reachable epoch position: {0}")]
    InvalidObservation(String),
    #[error("policy table has {got} entries but the model has {expected} states")]
    TableSize { expected: usize, got: usize },
    #[error("policy table entry {0} is infeasible (switch without arrival)")]
    Infeasible(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("policy is incompatible with the configured update sizes: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
