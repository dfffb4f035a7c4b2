//! Depolarizing noise acting on the distributed GHZ state and the
//! error probabilities it induces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_key::ObservedStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// White noise on all `N` qubits at once: `(1 - nu) |GHZ><GHZ| + nu id / 2^N`.
    #[serde(alias = "global-depolarizing")]
    Global,
    /// An independent depolarizing map of strength `nu` on every Bob's qubit.
    #[serde(alias = "local-depolarizing")]
    Local,
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Ok(Self::Global),
            "local" => Ok(Self::Local),
            other => Err(Error::Config(format!("unknown noise model '{other}'"))),
        }
    }
}

impl std::fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Global => "global",
            Self::Local => "local",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScenario {
    pub model: NoiseModel,
    pub nu: f64,
    pub parties: u32,
}

impl NoiseScenario {
    pub fn new(model: NoiseModel, nu: f64, parties: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::Config(format!("noise parameter must lie in [0, 1], got {nu}")));
        }
        if parties < 2 {
            return Err(Error::Config(format!("need at least 2 parties, got {parties}")));
        }
        Ok(Self { model, nu, parties })
    }

    /// The scenario whose pairwise Z-error probability equals `p_ab` (`nu = 2 p_ab`).
    pub fn from_pair_error(model: NoiseModel, p_ab: f64, parties: u32) -> Result<Self> {
        Self::new(model, 2.0 * p_ab, parties)
    }
}

/// Single-round error probabilities, identical for every Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalProbabilities {
    /// Probability that Alice and a given Bob see different Z outcomes.
    pub p_ab: f64,
    /// Probability of the outcome -1 when measuring `X^{⊗N}`.
    pub p_x: f64,
    /// Probability that at least one Bob disagrees with Alice in the Z basis.
    pub p_z: f64,
}

/// `1 - (1 - x)^k`, evaluated through `log1p`/`expm1` to avoid cancellation at small `x`.
fn one_minus_pow_complement(x: f64, k: u32) -> f64 {
    if x >= 1.0 {
        return if k == 0 { 0.0 } else { 1.0 };
    }
    -(f64::from(k) * (-x).ln_1p()).exp_m1()
}

pub fn marginal_probabilities(scenario: &NoiseScenario) -> MarginalProbabilities {
    let p_ab = scenario.nu / 2.0;
    let bobs = scenario.parties - 1;
    match scenario.model {
        NoiseModel::Global => {
            // (2^N - 2) / 2^(N-1) = 2 - 2^(2-N)
            let factor = 2.0 - (2.0 - f64::from(scenario.parties)).exp2();
            MarginalProbabilities {
                p_ab,
                p_x: p_ab,
                p_z: factor * p_ab,
            }
        }
        NoiseModel::Local => MarginalProbabilities {
            p_ab,
            p_x: 0.5 * one_minus_pow_complement(2.0 * p_ab, bobs),
            p_z: one_minus_pow_complement(p_ab, bobs),
        },
    }
}

/// Observed frequencies equal to the underlying probabilities.
pub fn expected_observed_stats(scenario: &NoiseScenario) -> ObservedStats {
    let probs = marginal_probabilities(scenario);
    ObservedStats::symmetric(probs.p_ab, probs.p_x, probs.p_z)
}
