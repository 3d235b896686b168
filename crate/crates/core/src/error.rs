use thiserror::Error;

/// Failure modes shared by every stage of the witness pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error(
        "witness does not change sign across the temperature bracket: \
         W({t_low:.6e} K) = {w_low:.6e}, W({t_high:.6e} K) = {w_high:.6e}"
    )]
    Bracket {
        t_low: f64,
        t_high: f64,
        w_low: f64,
        w_high: f64,
    },

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("grid under-resolved: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, WitnessError>;
