use thiserror::Error;

/// Errors raised by the modeling, synthesis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid physical parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("invalid delay {0} s (must be > 0 for augmentation)")]
    InvalidDelay(f64),

    #[error("invalid controller spec: {0}")]
    InvalidSpec(String),

    #[error("model is not controllable (rank {rank} < order {order})")]
    Uncontrollable { rank: usize, order: usize },

    #[error("invalid pole set: {0}")]
    InvalidPoles(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simulation diverged at t = {time} s")]
    Diverged { time: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
