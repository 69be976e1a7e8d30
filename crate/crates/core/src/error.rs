use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("scale equation has no root below t_min = {t_min:.6}; requested t = {t}, use a larger time")]
    AlphaBracket { t: f64, t_min: f64 },

    #[error("window of radius {required} exceeds the sampled field of radius {available}")]
    WindowExceedsField { required: f64, available: f64 },

    #[error(
        "eigensolver did not converge after {iterations} iterations: \
         Rayleigh quotient {rayleigh}, residual {residual:e}"
    )]
    EigenNonConvergence { rayleigh: f64, residual: f64, iterations: usize },

    #[error("time step underflow at time {time}: stiffness ratio estimate {stiffness_ratio:e}")]
    StepUnderflow { time: f64, stiffness_ratio: f64 },

    #[error("grid spacing {spacing} is coarser than the lattice cell width {required}")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("constraint eps = {eps} is infeasible: it must be below {bound}")]
    Infeasible { eps: f64, bound: f64 },

    #[error("density is not normalized: total mass {mass}")]
    NotNormalized { mass: f64 },

    #[error("all importance weights vanished")]
    AllWeightsZero,

    #[error("operation unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
