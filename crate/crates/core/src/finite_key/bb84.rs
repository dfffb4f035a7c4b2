use super::{
    ec_log, epsilon_total_nbb84, pa_log, preshared_cost, KeyLengthResult, KeyLengthTerms, ObservedStats,
    ProtocolConfig, ProtocolKind, SecurityBudget,
};
use crate::error::{Error, Result};
use crate::numerics::{h2, xi_correction};

/// Entropy penalty for an error frequency pushed up by its sampling slack.
/// Saturates at one bit: past 1/2 the bound carries no information.
fn penalty(q: f64, slack: f64) -> f64 {
    h2((q + slack).clamp(0.0, 0.5))
}

/// Key length of the N-BB84 protocol with optimal one-way error correction,
/// bounded through the entropic uncertainty relation.
///
/// ```text
/// l = n [1 - h(Q_X + 2 xi_x) - max_i h(Q_ABi + 2 xi_z)]
///     - log2(2(N-1)/eps_EC) - 2 log2((1 - 2(N-1) eps_PE) / (2 eps_PA))
/// ```
pub fn key_length_nbb84(
    config: &ProtocolConfig,
    stats: &ObservedStats,
    budget: &SecurityBudget,
) -> Result<KeyLengthResult> {
    if config.kind != ProtocolKind::NBb84 {
        return Err(Error::Config(format!("expected an N-BB84 configuration, got {}", config.kind)));
    }
    let counts = config.counts()?;
    stats.validate(config.parties, Some(&counts))?;
    let parties = config.parties;

    let xi_x = xi_correction(budget.eps_x, counts.n, counts.m)?;
    let xi_z = xi_correction(budget.eps_z, counts.n, counts.m)?;
    let h_x = penalty(stats.q_x, 2.0 * xi_x);
    let h_ab = stats
        .q_ab_values(parties)
        .into_iter()
        .map(|q| penalty(q, 2.0 * xi_z))
        .fold(0.0, f64::max);

    let eps_pe = budget.eps_pe(ProtocolKind::NBb84, parties)?;
    let eps_rob = budget.eps_rob(ProtocolKind::NBb84, parties)?;
    let n = counts.n as f64;
    let terms = KeyLengthTerms {
        min_entropy_term: n * (1.0 - h_x),
        leakage_term: -n * h_ab,
        ec_log_term: -ec_log(parties, budget.eps_ec),
        pa_term: -pa_log(eps_rob, budget.eps_pa)?,
        ps_penalty: 0.0,
        preshared_cost: preshared_cost(config.total_rounds, config.second_type_prob),
    };
    let eps_tot = epsilon_total_nbb84(budget, parties)?;
    Ok(KeyLengthResult::assemble(config, counts, terms, eps_pe, eps_tot, None))
}
