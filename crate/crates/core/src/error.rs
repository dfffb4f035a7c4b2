use thiserror::Error;

/// Errors raised by the rate evaluators, optimizer and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The protocol configuration leaves no rounds for estimation or key generation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The security budget violates a structural requirement.
    #[error("invalid security budget: {0}")]
    Budget(String),

    /// Observed statistics are inconsistent with the configuration.
    #[error("invalid statistics: {0}")]
    Stats(String),

    /// A root search was given a bracket without a sign change.
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// A dense construction was asked for more qubits than it supports.
    #[error("{parties} parties exceed the dense-matrix limit of {max}")]
    TooLarge { parties: u32, max: u32 },
}

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
