use thiserror::Error;

/// Errors raised by the signal, channel, estimation and bound computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate LFSR: seed state must be nonzero")]
    DegenerateLfsr,

    #[error("non-maximal polynomial: taps {taps:?} repeat after {period} steps, expected {expected}")]
    NonMaximalPolynomial {
        taps: Vec<u32>,
        period: usize,
        expected: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: f64, right: f64 },

    #[error("waveform of {needed} samples exceeds the simulation buffer ({limit} samples)")]
    BufferOverflow { needed: usize, limit: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("lag {lag} exceeds the zero-padded buffer of {limit} samples")]
    LagOutOfRange { lag: i64, limit: usize },

    #[error("unbounded CRB: |kappa| = 0 carries no delay information")]
    UnboundedCrb,

    #[error("invalid PSD/kappa combination: determinant {value:e} at f = {frequency} Hz")]
    InvalidPsd { frequency: f64, value: f64 },

    #[error("numerical integration did not converge after {intervals} intervals")]
    IntegrationDiverged { intervals: usize },

    #[error("all CAF cells fall inside the exclusion region")]
    AllCellsExcluded,
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
