use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "tensor quadrature over {dims} dimensions exceeds the limit of {max}; use Monte Carlo"
    )]
    DimensionTooLarge { dims: usize, max: usize },

    #[error("singular least-squares fit: {0}")]
    SingularFit(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("accuracy loss: {0}")]
    AccuracyLoss(String),

    #[error("invalid spectral function: {0}")]
    InvalidFunction(String),

    #[error("invalid method: {0}")]
    InvalidMethod(String),

    #[error("unsupported operator: {0}")]
    Unsupported(String),

    #[error("discretization too coarse: eigenvalue excursion {excursion:.3e} outside [0, 1]")]
    DiscretizationTooCoarse { excursion: f64 },

    #[error("degenerate covariance: eigenvalue {0:.3e} is not inside (delta, 1 - delta)")]
    DegenerateCovariance(f64),

    #[error("problem too large: {0}")]
    TooLarge(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
