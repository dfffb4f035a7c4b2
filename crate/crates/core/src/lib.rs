//! Finite-key and asymptotic secret-key rates for the N-party BB84 and
//! six-state conference key agreement protocols over GHZ states.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: entropies, statistical deviation terms and log-domain
//!   security parameters ([`LogEps`]).
//! - [`noise`]: global and local depolarizing noise and the error
//!   probabilities they induce.
//! - [`finite_key`]: the computable key lengths of both protocols.
//! - [`asymptotic`]: the infinite-round rates and threshold root finding.
//! - [`optimize`]: budget allocation, rate maximisation and the crossover
//!   round count at which the six-state protocol overtakes N-BB84.
//! - [`simulate`]: Monte Carlo and exact reference engines used to validate
//!   the closed forms.

pub mod asymptotic;
pub mod error;
pub mod finite_key;
pub mod noise;
pub mod numerics;
pub mod optimize;
pub mod simulate;

pub use error::{Error, Result};
pub use finite_key::{
    key_length, EpsTotal, KeyLengthResult, KeyLengthTerms, ObservedStats, ProtocolConfig, ProtocolKind,
    RoundCounts, SecurityBudget,
};
pub use noise::{MarginalProbabilities, NoiseModel, NoiseScenario};
pub use numerics::LogEps;
