use thiserror::Error;

/// Errors shared by all pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown map `{0}`")]
    UnknownMap(String),

    #[error("invalid parameter {name}={value}: {reason}")]
    InvalidParam {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("point {0} is outside the phase space")]
    OutsidePhaseSpace(f64),

    #[error("pull-back of order {order} crosses a branch boundary at step {step}; retry with a smaller delta")]
    BranchBoundaryCrossed { order: usize, step: usize },

    #[error("enumeration exceeded the guard of {max} items; raise `max_preimages` or lower the cutoff")]
    BlowupGuard { max: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iteration did not converge within {iters} steps (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("pressure estimate diverges on the whole bracket")]
    DivergentPressure,

    #[error("no sign change of the pressure objective over the bracket ({0}, {1})")]
    NoSignChange(f64, f64),

    #[error("pruning removed every element of the scheme")]
    EmptyScheme,

    #[error("{0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
