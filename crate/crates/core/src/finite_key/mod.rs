//! Computable finite-key lengths for the N-BB84 and N-six-state protocols.
//!
//! Both evaluators return a [`KeyLengthResult`] whose signed terms add up to
//! the raw key length `l`; the net length additionally pays for the
//! preshared key that marks the test rounds (`L h(p)` bits).

mod bb84;
mod six_state;

use serde::{Deserialize, Serialize};

pub use bb84::key_length_nbb84;
pub use six_state::{
    gamma_pe_infimum, infimum_over_box, key_length_nsixstate, six_state_entropy_expression,
    GammaInfimum, PeWidths, GRID_POINTS, REFINE_POINTS,
};

use crate::error::{Error, Result};
use crate::noise::MarginalProbabilities;
use crate::numerics::{eps_sqrt, eps_sum, h2, log2_inv_sum, LogEps};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "bb84")]
    NBb84,
    #[serde(rename = "six-state")]
    NSixState,
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::NBb84 => "bb84",
            Self::NSixState => "six-state",
        })
    }
}

/// Round bookkeeping: `m` test rounds of each type, `n` key rounds and the
/// `m'` X-parity samples accepted by the six-state protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCounts {
    pub m: u64,
    pub n: u64,
    pub m_prime: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub parties: u32,
    pub total_rounds: u64,
    /// Probability `p` of a second-type (X-basis) round.
    pub second_type_prob: f64,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind, parties: u32, total_rounds: u64, second_type_prob: f64) -> Result<Self> {
        let config = Self {
            kind,
            parties,
            total_rounds,
            second_type_prob,
        };
        derive_counts(&config)?;
        Ok(config)
    }

    pub fn counts(&self) -> Result<RoundCounts> {
        derive_counts(self)
    }
}

/// `m = floor(L p)`, `n = L - 2m`, `m' = floor(m / 2)`.
pub fn derive_counts(config: &ProtocolConfig) -> Result<RoundCounts> {
    let p = config.second_type_prob;
    if config.parties < 2 {
        return Err(Error::Config(format!("need at least 2 parties, got {}", config.parties)));
    }
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Config(format!("second-type probability must lie in (0, 1/2), got {p}")));
    }
    let l = config.total_rounds;
    let m = (l as f64 * p).floor() as u64;
    if m < 1 {
        return Err(Error::Config(format!("L = {l}, p = {p} leaves no test rounds")));
    }
    let n = l.checked_sub(2 * m).filter(|&n| n >= 1).ok_or_else(|| {
        Error::Config(format!("L = {l}, p = {p} leaves no key rounds"))
    })?;
    let m_prime = m / 2;
    if config.kind == ProtocolKind::NSixState && m_prime < 1 {
        return Err(Error::Config(format!("L = {l}, p = {p} leaves no accepted X-parity rounds")));
    }
    Ok(RoundCounts { m, n, m_prime })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub m: u64,
    pub m_prime: u64,
}

/// Frequencies observed during parameter estimation.
///
/// Every Bob shares the same pairwise error frequency `q_ab` unless an
/// explicit per-Bob list is supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedStats {
    pub q_ab: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_ab_per_bob: Option<Vec<f64>>,
    pub q_x: f64,
    pub q_z: f64,
    /// Sample sizes the frequencies were collected on, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_sizes: Option<SampleSizes>,
}

impl ObservedStats {
    pub fn symmetric(q_ab: f64, q_x: f64, q_z: f64) -> Self {
        Self {
            q_ab,
            q_ab_per_bob: None,
            q_x,
            q_z,
            sample_sizes: None,
        }
    }

    pub fn per_bob(q_ab: Vec<f64>, q_x: f64, q_z: f64) -> Self {
        let max = q_ab.iter().copied().fold(0.0, f64::max);
        Self {
            q_ab: max,
            q_ab_per_bob: Some(q_ab),
            q_x,
            q_z,
            sample_sizes: None,
        }
    }

    pub fn with_sample_sizes(mut self, m: u64, m_prime: u64) -> Self {
        self.sample_sizes = Some(SampleSizes { m, m_prime });
        self
    }

    /// The pairwise frequencies, one per Bob.
    pub fn q_ab_values(&self, parties: u32) -> Vec<f64> {
        match &self.q_ab_per_bob {
            Some(v) => v.clone(),
            None => vec![self.q_ab; parties.saturating_sub(1) as usize],
        }
    }

    pub fn max_q_ab(&self) -> f64 {
        match &self.q_ab_per_bob {
            Some(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            None => self.q_ab,
        }
    }

    pub fn validate(&self, parties: u32, counts: Option<&RoundCounts>) -> Result<()> {
        let unit = |name: &str, q: f64| {
            if (0.0..=1.0).contains(&q) {
                Ok(())
            } else {
                Err(Error::Stats(format!("{name} = {q} is not a frequency")))
            }
        };
        unit("q_ab", self.q_ab)?;
        unit("q_x", self.q_x)?;
        unit("q_z", self.q_z)?;
        if let Some(v) = &self.q_ab_per_bob {
            if v.len() != parties.saturating_sub(1) as usize {
                return Err(Error::Stats(format!(
                    "{} per-Bob frequencies for {} parties",
                    v.len(),
                    parties
                )));
            }
            for &q in v {
                unit("q_ab", q)?;
            }
        }
        if let (Some(s), Some(c)) = (self.sample_sizes, counts) {
            if s.m != c.m || s.m_prime != c.m_prime {
                return Err(Error::Stats(format!(
                    "statistics collected on (m, m') = ({}, {}) but the configuration yields ({}, {})",
                    s.m, s.m_prime, c.m, c.m_prime
                )));
            }
        }
        Ok(())
    }
}

/// Security parameters of the individual protocol steps.
///
/// `eps_bar` and `eps_z_prime` appear only in the six-state analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityBudget {
    pub eps_bar: Option<LogEps>,
    pub eps_z: LogEps,
    pub eps_x: LogEps,
    pub eps_z_prime: Option<LogEps>,
    pub eps_ec: LogEps,
    pub eps_pa: LogEps,
}

impl SecurityBudget {
    pub fn nbb84(eps_z: LogEps, eps_x: LogEps, eps_ec: LogEps, eps_pa: LogEps) -> Self {
        Self {
            eps_bar: None,
            eps_z,
            eps_x,
            eps_z_prime: None,
            eps_ec,
            eps_pa,
        }
    }

    pub fn six_state(
        eps_bar: LogEps,
        eps_z: LogEps,
        eps_x: LogEps,
        eps_z_prime: LogEps,
        eps_ec: LogEps,
        eps_pa: LogEps,
    ) -> Self {
        Self {
            eps_bar: Some(eps_bar),
            eps_z,
            eps_x,
            eps_z_prime: Some(eps_z_prime),
            eps_ec,
            eps_pa,
        }
    }

    /// Every component set to the same value.
    pub fn uniform(eps: LogEps) -> Self {
        Self::six_state(eps, eps, eps, eps, eps, eps)
    }

    pub(crate) fn eps_bar(&self) -> Result<LogEps> {
        self.eps_bar
            .ok_or_else(|| Error::Budget("six-state analysis needs eps_bar".into()))
    }

    pub(crate) fn eps_z_prime(&self) -> Result<LogEps> {
        self.eps_z_prime
            .ok_or_else(|| Error::Budget("six-state analysis needs eps_z_prime".into()))
    }

    /// The parameter-estimation failure probability of the given protocol.
    pub fn eps_pe(&self, kind: ProtocolKind, parties: u32) -> Result<LogEps> {
        let bobs = f64::from(parties - 1);
        match kind {
            // sqrt((N-1) eps_z + eps_x)
            ProtocolKind::NBb84 => Ok(eps_sqrt(eps_sum(&[(bobs, self.eps_z), (1.0, self.eps_x)])?)),
            // eps_z' + (N-1) eps_z + eps_x
            ProtocolKind::NSixState => eps_sum(&[
                (1.0, self.eps_z_prime()?),
                (bobs, self.eps_z),
                (1.0, self.eps_x),
            ]),
        }
    }

    /// `eps_rob = 2 (N-1) eps_PE`, which must stay below one.
    pub fn eps_rob(&self, kind: ProtocolKind, parties: u32) -> Result<LogEps> {
        let pe = self.eps_pe(kind, parties)?;
        let neg = pe.neg_log2() - (2.0 * f64::from(parties - 1)).log2();
        if neg <= 0.0 {
            return Err(Error::Budget(format!(
                "robustness parameter 2(N-1) eps_PE = 2^{} is not below one",
                -neg
            )));
        }
        LogEps::from_neg_log2(neg)
    }
}

/// A composed security level `eps_tot`, kept as `log2(1/eps_tot)`.
///
/// Unlike [`LogEps`] the exponent may be negative: the postselection factor
/// can push the six-state `eps_tot` above one, which makes the security
/// statement vacuous.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpsTotal {
    pub neg_log2: f64,
}

impl EpsTotal {
    pub fn is_vacuous(self) -> bool {
        self.neg_log2 < 0.0
    }

    pub fn as_log_eps(self) -> Option<LogEps> {
        LogEps::from_neg_log2(self.neg_log2).ok()
    }

    /// True when this level is at least as strong as `target` (`eps_tot <= target`).
    pub fn meets(self, target: LogEps) -> bool {
        self.neg_log2 >= target.neg_log2()
    }
}

/// `eps_tot = 2 eps_PE + eps_EC + eps_PA` with `eps_PE = sqrt((N-1) eps_z + eps_x)`.
pub fn epsilon_total_nbb84(budget: &SecurityBudget, parties: u32) -> Result<EpsTotal> {
    let pe = budget.eps_pe(ProtocolKind::NBb84, parties)?;
    Ok(EpsTotal {
        neg_log2: log2_inv_sum(&[
            (2.0, pe.neg_log2()),
            (1.0, budget.eps_ec.neg_log2()),
            (1.0, budget.eps_pa.neg_log2()),
        ]),
    })
}

/// Exponent `2^{2N} - 1` of the postselection factor `(L+1)^{2^{2N}-1}`.
pub fn postselection_exponent(parties: u32) -> f64 {
    4f64.powi(parties as i32) - 1.0
}

/// `eps_tot = (L+1)^{2^{2N}-1} (2 eps_bar + eps_PE + eps_EC + eps_PA)`.
pub fn epsilon_total_nsixstate(budget: &SecurityBudget, parties: u32, total_rounds: u64) -> Result<EpsTotal> {
    let pe = budget.eps_pe(ProtocolKind::NSixState, parties)?;
    let inner = log2_inv_sum(&[
        (2.0, budget.eps_bar()?.neg_log2()),
        (1.0, pe.neg_log2()),
        (1.0, budget.eps_ec.neg_log2()),
        (1.0, budget.eps_pa.neg_log2()),
    ]);
    let blowup = postselection_exponent(parties) * (total_rounds as f64 + 1.0).log2();
    Ok(EpsTotal {
        neg_log2: inner - blowup,
    })
}

pub fn epsilon_total(budget: &SecurityBudget, config: &ProtocolConfig) -> Result<EpsTotal> {
    match config.kind {
        ProtocolKind::NBb84 => epsilon_total_nbb84(budget, config.parties),
        ProtocolKind::NSixState => epsilon_total_nsixstate(budget, config.parties, config.total_rounds),
    }
}

/// Signed contributions to the key length; the first five sum to the raw length.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KeyLengthTerms {
    /// `n` times the per-round min-entropy bound.
    pub min_entropy_term: f64,
    /// Minus `n` times the per-round error-correction entropy.
    pub leakage_term: f64,
    /// `-log2(2(N-1)/eps_EC)`.
    pub ec_log_term: f64,
    /// `-2 log2((1 - eps_rob) / (2 eps_PA))`.
    pub pa_term: f64,
    /// `-2 (2^{2N} - 1) log2(L + 1)`; zero for N-BB84.
    pub ps_penalty: f64,
    /// `L h(p)` bits of preshared key consumed (subtracted from the raw length).
    pub preshared_cost: f64,
}

impl KeyLengthTerms {
    pub fn raw(&self) -> f64 {
        self.min_entropy_term + self.leakage_term + self.ec_log_term + self.pa_term + self.ps_penalty
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyLengthResult {
    pub kind: ProtocolKind,
    pub counts: RoundCounts,
    /// `l`; may be negative, or `-inf` when no probabilities are compatible with the statistics.
    pub raw_length: f64,
    /// `l - L h(p)`.
    pub net_length: f64,
    /// `max(net_length, 0) / L`.
    pub rate: f64,
    pub terms: KeyLengthTerms,
    pub eps_pe: LogEps,
    pub eps_tot: EpsTotal,
    /// Worst-case probabilities found in the six-state estimation set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<MarginalProbabilities>,
}

impl KeyLengthResult {
    pub(crate) fn assemble(
        config: &ProtocolConfig,
        counts: RoundCounts,
        terms: KeyLengthTerms,
        eps_pe: LogEps,
        eps_tot: EpsTotal,
        witness: Option<MarginalProbabilities>,
    ) -> Self {
        let raw_length = terms.raw();
        let net_length = raw_length - terms.preshared_cost;
        Self {
            kind: config.kind,
            counts,
            raw_length,
            net_length,
            rate: clamped_rate(net_length, config.total_rounds),
            terms,
            eps_pe,
            eps_tot,
            witness,
        }
    }

    /// Net length per round without clamping; `-inf` for infeasible statistics.
    pub fn signed_rate(&self, total_rounds: u64) -> f64 {
        self.net_length / total_rounds as f64
    }
}

fn clamped_rate(net_length: f64, total_rounds: u64) -> f64 {
    if net_length > 0.0 {
        net_length / total_rounds as f64
    } else {
        0.0
    }
}

/// `raw - L h(p)`: the key left after refreshing the preshared round markers.
pub fn net_key_length(raw: f64, total_rounds: u64, p: f64) -> f64 {
    raw - preshared_cost(total_rounds, p)
}

pub(crate) fn preshared_cost(total_rounds: u64, p: f64) -> f64 {
    total_rounds as f64 * h2(p)
}

/// `log2(2(N-1)/eps_EC)`.
pub(crate) fn ec_log(parties: u32, eps_ec: LogEps) -> f64 {
    1.0 + f64::from(parties - 1).log2() + eps_ec.neg_log2()
}

/// `2 log2((1 - eps_rob) / (2 eps_PA))`.
pub(crate) fn pa_log(eps_rob: LogEps, eps_pa: LogEps) -> Result<f64> {
    Ok(2.0 * (crate::numerics::log2_one_minus(eps_rob)? - 1.0 + eps_pa.neg_log2()))
}

/// Dispatches to the evaluator matching `config.kind`.
pub fn key_length(config: &ProtocolConfig, stats: &ObservedStats, budget: &SecurityBudget) -> Result<KeyLengthResult> {
    match config.kind {
        ProtocolKind::NBb84 => key_length_nbb84(config, stats, budget),
        ProtocolKind::NSixState => key_length_nsixstate(config, stats, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn le(neg: f64) -> LogEps {
        LogEps::from_neg_log2(neg).unwrap()
    }

    #[test]
    fn counts_examples() {
        let c = ProtocolConfig::new(ProtocolKind::NBb84, 3, 1000, 0.1).unwrap().counts().unwrap();
        assert_eq!((c.m, c.n, c.m_prime), (100, 800, 50));
        let c = ProtocolConfig::new(ProtocolKind::NSixState, 3, 10, 0.45).unwrap().counts().unwrap();
        assert_eq!((c.m, c.n, c.m_prime), (4, 2, 2));
        assert!(ProtocolConfig::new(ProtocolKind::NBb84, 3, 10, 0.05).is_err());
    }

    #[test]
    fn counts_rejects_degenerate_configs() {
        assert!(ProtocolConfig::new(ProtocolKind::NBb84, 1, 1000, 0.1).is_err());
        assert!(ProtocolConfig::new(ProtocolKind::NBb84, 2, 1000, 0.5).is_err());
        assert!(ProtocolConfig::new(ProtocolKind::NBb84, 2, 1000, 0.0).is_err());
        // m = 1 is fine for BB84 but leaves m' = 0 for six-state.
        assert!(ProtocolConfig::new(ProtocolKind::NBb84, 2, 10, 0.1).is_ok());
        assert!(ProtocolConfig::new(ProtocolKind::NSixState, 2, 10, 0.1).is_err());
    }

    #[test]
    fn eps_total_nbb84_dominance() {
        let b = SecurityBudget::nbb84(le(200.0), le(200.0), le(20.0), le(80.0));
        let t = epsilon_total_nbb84(&b, 4).unwrap();
        assert_relative_eq!(t.neg_log2, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn eps_pe_equal_terms_two_parties() {
        let b = SecurityBudget::nbb84(le(60.0), le(60.0), le(30.0), le(30.0));
        // sqrt(2 eps_z) = 2^{-(60 - 1)/2}
        assert_eq!(b.eps_pe(ProtocolKind::NBb84, 2).unwrap().neg_log2(), 29.5);
    }

    #[test]
    fn eps_total_nsixstate_postselection() {
        assert_eq!(postselection_exponent(2), 15.0);
        let b = SecurityBudget::uniform(le(400.0));
        let inner = log2_inv_sum(&[(2.0, 400.0), (1.0, b.eps_pe(ProtocolKind::NSixState, 2).unwrap().neg_log2()), (1.0, 400.0), (1.0, 400.0)]);
        let t0 = epsilon_total_nsixstate(&b, 2, 0).unwrap();
        assert_eq!(t0.neg_log2, inner);
        let t = epsilon_total_nsixstate(&b, 2, 1_000_000).unwrap();
        assert_relative_eq!(t.neg_log2, inner - 15.0 * 1_000_001f64.log2(), max_relative = 1e-14);
        assert!(!t.is_vacuous());
        let vac = epsilon_total_nsixstate(&SecurityBudget::uniform(le(50.0)), 4, 1_000_000).unwrap();
        assert!(vac.is_vacuous());
        assert!(vac.as_log_eps().is_none());
    }

    #[test]
    fn budget_requires_six_state_components() {
        let b = SecurityBudget::nbb84(le(60.0), le(60.0), le(30.0), le(30.0));
        assert!(matches!(b.eps_pe(ProtocolKind::NSixState, 3), Err(Error::Budget(_))));
        assert!(epsilon_total_nsixstate(&b, 3, 100).is_err());
    }

    #[test]
    fn eps_rob_must_stay_below_one() {
        let b = SecurityBudget::nbb84(le(1.0), le(1.0), le(30.0), le(30.0));
        assert!(b.eps_rob(ProtocolKind::NBb84, 5).is_err());
    }

    #[test]
    fn net_key_length_examples() {
        assert_eq!(net_key_length(1000.0, 1000, 0.0), 1000.0);
        assert_eq!(net_key_length(1000.0, 1000, 0.5), 0.0);
    }

    #[test]
    fn stats_validation() {
        let s = ObservedStats::per_bob(vec![0.01, 0.02], 0.01, 0.03);
        assert_eq!(s.max_q_ab(), 0.02);
        assert!(s.validate(3, None).is_ok());
        assert!(s.validate(4, None).is_err());
        assert!(ObservedStats::symmetric(1.2, 0.0, 0.0).validate(2, None).is_err());
        let counts = RoundCounts { m: 10, n: 80, m_prime: 5 };
        let sized = ObservedStats::symmetric(0.0, 0.0, 0.0).with_sample_sizes(10, 5);
        assert!(sized.validate(2, Some(&counts)).is_ok());
        let wrong = ObservedStats::symmetric(0.0, 0.0, 0.0).with_sample_sizes(11, 5);
        assert!(wrong.validate(2, Some(&counts)).is_err());
    }
}
