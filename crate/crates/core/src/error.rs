use crate::model::FeasibilityReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid utility function: {0}")]
    InvalidUtility(String),

    #[error("interval [{start}, {end}] lies outside the horizon [0, {horizon}]")]
    OutsideHorizon {
        start: String,
        end: String,
        horizon: String,
    },

    #[error("agent {agent} has demand {demand} exceeding supply {supply}")]
    DemandExceedsSupply {
        agent: usize,
        demand: String,
        supply: String,
    },

    #[error("agent {0} has zero total utility and cannot be normalized")]
    ZeroUtility(usize),

    #[error("agent {0} values the interval at zero; its Even-Paz mark is undefined")]
    ZeroValueOnInterval(usize),

    #[error("strategy requires identical demands; use the packing/egalitarian solvers for heterogeneous demands")]
    HeterogeneousDemands,

    #[error("allocation is infeasible: {0}")]
    Infeasible(FeasibilityReport),

    #[error("allocation has {found} agents, instance has {expected}")]
    AgentCountMismatch { expected: usize, found: usize },

    #[error("{what}: n = {n} exceeds the cap of {cap}; use a heuristic mode (e.g. first-fit decreasing)")]
    TooManyAgents { what: &'static str, n: usize, cap: usize },

    #[error("linear program too large: {columns} columns exceeds cap {cap}")]
    ProgramTooLarge { columns: usize, cap: usize },

    #[error("group fair share is infeasible; violated groups: {0:?}")]
    GfsInfeasible(Vec<Vec<usize>>),

    #[error("the allocation connects a non-maximal agent set {members:?} for positive time")]
    NonMaximalSetConnected { members: Vec<usize> },

    #[error("demands need a common denominator too large for exact integer packing")]
    PrecisionOverflow,

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed schedule: {0}")]
    Schedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
