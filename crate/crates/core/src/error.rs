use thiserror::Error;

/// Broad failure classes; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Configuration,
    Numerical,
    Truncation,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mode {m} lies outside the retained band |k| <= {k_max}")]
    Range { m: i64, k_max: usize },

    #[error("fourier coefficient V_{k} not converged: grid doubling changed it by {change:.3e}")]
    Resolution { k: i64, change: f64 },

    #[error("integration failed at tau = {tau}: {reason}")]
    Integration { tau: f64, reason: String },

    #[error("tolerance exceeded at tau = {tau}: {quantity} = {value:.3e} (limit {limit:.1e})")]
    Tolerance {
        tau: f64,
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error(
        "band truncation violated at tau = {tau}: edge population {edge_population:.3e} \
         exceeds {limit:.1e}; increase m_max (currently {m_max})"
    )]
    Truncation {
        tau: f64,
        edge_population: f64,
        limit: f64,
        m_max: usize,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Range { .. } => ErrorKind::Configuration,
            Error::Resolution { .. } | Error::Integration { .. } | Error::Tolerance { .. } => {
                ErrorKind::Numerical
            }
            Error::Truncation { .. } => ErrorKind::Truncation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
