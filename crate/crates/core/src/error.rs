use thiserror::Error;

use crate::walk::ExitRecord;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scale range: m = {m} must be below n = {n}")]
    InvalidRange { m: u32, n: u32 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("field synthesis needs about {required_bytes} bytes but the budget is {budget_bytes}")]
    Resource { required_bytes: u64, budget_bytes: u64 },
    #[error("synthesis accuracy: {0}")]
    Synthesis(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("network shape: {0}")]
    Shape(String),
    #[error("invalid network: {0}")]
    Network(String),
    #[error("invalid terminals: {0}")]
    Terminals(String),
    #[error("terminals are not connected")]
    Disconnected,
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },
    #[error("path decomposition failed: {0}")]
    Decomposition(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("vertex {0} has no neighbours")]
    Degree(usize),
    #[error("step budget of {budget} exhausted at vertex {}", partial.exit_vertex)]
    StepBudget { budget: u64, partial: Box<ExitRecord> },
    #[error("singular structure: {0}")]
    Structure(String),
    #[error("missing data: {0}")]
    Data(String),
    #[error("{count} replica(s) failed: {detail}")]
    Replicas { count: usize, detail: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
