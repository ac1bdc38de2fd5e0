use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("parameter `{name}` out of domain: {reason}")]
    ParameterDomain { name: &'static str, reason: String },

    /// A numerical precondition failed (non-PSD input, breakdown, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Dimensions of inputs do not agree.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// A receive filter could not be formed because a Gram matrix is singular.
    #[error("{design} filter is singular: channel matrix is rank deficient")]
    Singular { design: &'static str },

    /// Least-squares estimation with a rank deficient autocorrelation.
    #[error("autocorrelation is rank deficient after {samples} samples (need {needed} independent vectors)")]
    RankDeficient { samples: usize, needed: usize },

    /// A brute-force search exceeded its guard.
    #[error("search space too large: {0}")]
    Capacity(String),

    /// Scenario configuration error.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    /// A constituent failure tagged with the trial that raised it.
    #[error("trial {trial} at SNR {snr_db} dB: {source}")]
    Trial {
        trial: usize,
        snr_db: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::ParameterDomain {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(
        context: &'static str,
        expected: impl std::fmt::Display,
        actual: impl std::fmt::Display,
    ) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// True for failures caused by the scenario description rather than the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } | Error::ParameterDomain { .. } | Error::Capacity(_) => true,
            Error::Trial { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
