use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a {ndim}-dimensional grid")]
    AxisOutOfRange { axis: usize, ndim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite query point component {0}")]
    NonFinitePoint(f64),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("control {value:.6} exceeds bound {bound:.6}")]
    ControlBound { value: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("stale artifact {name}: expected hash {expected}, found {found}")]
    StaleArtifact {
        name: String,
        expected: String,
        found: String,
    },

    #[error("solver produced a non-finite value at node {node} (iteration {iteration})")]
    NonFiniteValue { node: usize, iteration: usize },

    #[error("snapshots are not ordered by increasing horizon")]
    UnorderedSnapshots,

    #[error("grid has {nodes} nodes, oracle cap is {cap}")]
    NodeCapExceeded { nodes: usize, cap: usize },

    #[error("simulation input is not finite")]
    NonFiniteState,

    #[error("policy failure: {0}")]
    Policy(String),

    #[error("bad HJVF file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
