use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("instance too large for exhaustive oracle ({n_agents} agents x {n_tasks} tasks, limit {limit} entries)")]
    OracleGuard {
        n_agents: usize,
        n_tasks: usize,
        limit: usize,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("numerical failure in simplex: {0}")]
    Numerical(String),
    #[error("fractional solution expected for branching")]
    IntegralBranch,
    #[error("round cap of {cap} exceeded (label {label}, {halted} of {agents} agents halted)")]
    RoundCap {
        cap: u64,
        label: u64,
        halted: usize,
        agents: usize,
    },
    #[error("route of {0} tasks exceeds brute-force limit of {1}")]
    RouteGuard(usize, usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
