use thiserror::Error;

/// Failures raised by grid construction, field validation and the solver.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type used
/// by the failing computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field length {got} does not match grid with {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at grid index {index}")]
    NonFinite { index: usize },

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("amplitude vanishes on the whole grid; phase is undefined")]
    PhaseUndefined,

    #[error("classical case has no scaled counterpart (epsilon = 0)")]
    ClassicalLimit,

    #[error("grid too narrow: {detail} (required half-extent >= {required_extent:.3})")]
    GridTooNarrow { required_extent: f64, detail: String },

    #[error("instability detected at step {step} (t = {time}): relative norm change {relative_change:.3e}")]
    Instability {
        step: usize,
        time: f64,
        relative_change: f64,
    },

    #[error("non-finite state at step {step} (t = {time})")]
    Diverged { step: usize, time: f64 },

    #[error("invalid time: {0}")]
    InvalidTime(String),
}

pub type Result<T> = std::result::Result<T, Error>;
