use thiserror::Error;

/// Errors produced by model construction, solvers and oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("stability violated: {0}")]
    Unstable(String),

    #[error("upstream service rate {c1_eff} does not exceed target rate {c2_eff}; the target queue cannot build up")]
    DegenerateNode { c1_eff: f64, c2_eff: f64 },

    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature did not converge: residual {residual:e}")]
    Quadrature { residual: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
