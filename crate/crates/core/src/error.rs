use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid population state: {0}")]
    InvalidState(String),

    #[error("increment {index} cannot be applied: {reason}")]
    InvalidTransition { index: usize, reason: String },

    #[error("invalid initial configuration: {0}")]
    InvalidConfig(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// The absorption boundary is not crossed transversally (delta >= 0), so
    /// the Gaussian fluctuation theory does not apply.
    #[error("degenerate fluctuation problem: {0}")]
    Degenerate(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("cannot parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
