use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::{
    ec_log, epsilon_total_nsixstate, pa_log, postselection_exponent, preshared_cost, KeyLengthResult,
    KeyLengthTerms, ObservedStats, ProtocolConfig, ProtocolKind, RoundCounts, SecurityBudget,
};
use crate::error::{Error, Result};
use crate::noise::MarginalProbabilities;
use crate::numerics::{eta_correction, h2, xlog2x_unchecked};

/// Points per axis of the coarse `(P_X, P_Z)` grid, endpoints included.
pub const GRID_POINTS: usize = 64;
/// Points per axis of the refinement grid around the best coarse cell.
pub const REFINE_POINTS: usize = 17;

/// The `(P_X, P_Z)` part of the six-state bound, without the feasibility check.
#[inline]
fn entropy_core(p_x: f64, p_z: f64) -> f64 {
    let a = 1.0 - 0.5 * p_z - p_x;
    let b = p_x - 0.5 * p_z;
    let c = 1.0 - p_z;
    // (1 - P_Z)(1 - log2(1 - P_Z)) = c - c log2 c
    xlog2x_unchecked(a) + xlog2x_unchecked(b) + c - xlog2x_unchecked(c)
}

#[inline]
fn feasible(p_x: f64, p_z: f64) -> bool {
    let a = 1.0 - 0.5 * p_z - p_x;
    let b = p_x - 0.5 * p_z;
    a >= 0.0 && b >= 0.0 && (0.0..=1.0).contains(&p_z)
}

/// Per-round six-state bound
/// `(1 - P_Z/2 - P_X) log2(1 - P_Z/2 - P_X) + (P_X - P_Z/2) log2(P_X - P_Z/2)
///  + (1 - P_Z)(1 - log2(1 - P_Z)) - h(P_AB)`.
///
/// Returns `None` outside the region where the logarithms are defined.
pub fn six_state_entropy_expression(p_ab_worst: f64, p_x: f64, p_z: f64) -> Option<f64> {
    if !feasible(p_x, p_z) || !(0.0..=1.0).contains(&p_ab_worst) {
        return None;
    }
    Some(entropy_core(p_x, p_z) - h2(p_ab_worst))
}

/// Half-widths (before the factor 2) of the parameter-estimation box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeWidths {
    /// `eta(eps_z, 2, m)` for every `P_ABi`.
    pub eta_z: f64,
    /// `eta(eps_x, 2, m')` for `P_X`.
    pub eta_x: f64,
    /// `eta(eps_z', 2, m)` for `P_Z`.
    pub eta_z_prime: f64,
}

impl PeWidths {
    pub fn from_budget(budget: &SecurityBudget, counts: &RoundCounts) -> Result<Self> {
        Ok(Self {
            eta_z: eta_correction(budget.eps_z, 2, counts.m)?,
            eta_x: eta_correction(budget.eps_x, 2, counts.m_prime)?,
            eta_z_prime: eta_correction(budget.eps_z_prime()?, 2, counts.m)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaInfimum {
    /// Infimum of the per-round bound, `-h(P_AB)` of the worst Bob included.
    pub value: f64,
    /// The `(P_X, P_Z)` part of `value`, i.e. `value + h(witness.p_ab)`.
    pub core_value: f64,
    pub witness: MarginalProbabilities,
}

fn interval(center: f64, half_width: f64, upper: f64) -> Option<(f64, f64)> {
    let lo = (center - half_width).max(0.0);
    let hi = (center + half_width).min(upper);
    (lo <= hi).then_some((lo, hi))
}

#[inline]
fn grid_point(lo: f64, hi: f64, i: usize, points: usize) -> f64 {
    if i + 1 == points {
        hi
    } else {
        lo + (hi - lo) * (i as f64 / (points - 1) as f64)
    }
}

/// Lowest feasible value on a `points x points` grid over the box; ties keep the first index.
fn grid_min(x: (f64, f64), z: (f64, f64), points: usize) -> Option<(f64, usize, usize)> {
    let nx = if x.0 == x.1 { 1 } else { points };
    let nz = if z.0 == z.1 { 1 } else { points };
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..nx {
        let p_x = grid_point(x.0, x.1, i, nx);
        for j in 0..nz {
            let p_z = grid_point(z.0, z.1, j, nz);
            if !feasible(p_x, p_z) {
                continue;
            }
            let v = entropy_core(p_x, p_z);
            if best.is_none_or(|(b, _, _)| v < b) {
                best = Some((v, i, j));
            }
        }
    }
    best
}

/// Infimum of the six-state bound over the estimation box
/// `|Q_ABi - P_ABi| <= 2 eta_z`, `|Q_X - P_X| <= 2 eta_x`, `|Q_Z - P_Z| <= 2 eta_z'`,
/// intersected with `[0, 1/2]` (`P_AB`, `P_X`) and `[0, 1]` (`P_Z`).
///
/// The `P_AB` coordinate separates: `h` is unimodal with its peak at 1/2, so
/// the worst point of each interval is the endpoint nearest 1/2. The
/// `(P_X, P_Z)` part is searched on a fixed grid followed by one refinement
/// pass over the cells adjacent to the best grid point.
///
/// Returns `None` when no feasible point exists.
pub fn infimum_over_box(q_ab: &[f64], q_x: f64, q_z: f64, widths: &PeWidths) -> Option<GammaInfimum> {
    let mut p_ab_worst = f64::NEG_INFINITY;
    for &q in q_ab {
        let (_, hi) = interval(q, 2.0 * widths.eta_z, 0.5)?;
        p_ab_worst = p_ab_worst.max(hi);
    }
    if !p_ab_worst.is_finite() {
        return None;
    }
    let x_box = interval(q_x, 2.0 * widths.eta_x, 0.5)?;
    let z_box = interval(q_z, 2.0 * widths.eta_z_prime, 1.0)?;

    let (mut best, i, j) = grid_min(x_box, z_box, GRID_POINTS)?;
    let nx = if x_box.0 == x_box.1 { 1 } else { GRID_POINTS };
    let nz = if z_box.0 == z_box.1 { 1 } else { GRID_POINTS };
    let mut best_x = grid_point(x_box.0, x_box.1, i, nx);
    let mut best_z = grid_point(z_box.0, z_box.1, j, nz);

    let neighbour = |lo: f64, hi: f64, k: usize, count: usize| {
        if count == 1 {
            (lo, hi)
        } else {
            (
                grid_point(lo, hi, k.saturating_sub(1), count),
                grid_point(lo, hi, (k + 1).min(count - 1), count),
            )
        }
    };
    let rx = neighbour(x_box.0, x_box.1, i, nx);
    let rz = neighbour(z_box.0, z_box.1, j, nz);
    if let Some((v, ri, rj)) = grid_min(rx, rz, REFINE_POINTS) {
        if v < best {
            best = v;
            best_x = grid_point(rx.0, rx.1, ri, if rx.0 == rx.1 { 1 } else { REFINE_POINTS });
            best_z = grid_point(rz.0, rz.1, rj, if rz.0 == rz.1 { 1 } else { REFINE_POINTS });
        }
    }

    Some(GammaInfimum {
        value: best - h2(p_ab_worst),
        core_value: best,
        witness: MarginalProbabilities {
            p_ab: p_ab_worst,
            p_x: best_x,
            p_z: best_z,
        },
    })
}

/// Infimum of the six-state bound over the probabilities compatible with the
/// observed statistics; the box widths come from the budget and sample sizes.
pub fn gamma_pe_infimum(
    stats: &ObservedStats,
    budget: &SecurityBudget,
    parties: u32,
    counts: &RoundCounts,
) -> Result<Option<GammaInfimum>> {
    let widths = PeWidths::from_budget(budget, counts)?;
    Ok(infimum_over_box(&stats.q_ab_values(parties), stats.q_x, stats.q_z, &widths))
}

/// Key length of the N-six-state protocol: collective-attack bound from the
/// asymptotic equipartition property, lifted to coherent attacks by postselection.
///
/// ```text
/// l = n inf_Gamma[ F(P_X, P_Z) - max_i h(P_ABi) - 5 sqrt(log2(1/eps_bar)/n)
///                  - log2(5) sqrt(2 log2(1/(2 eps_PE))/n) ]
///     - log2(2(N-1)/eps_EC) - 2 log2((1 - 2(N-1) eps_PE)/(2 eps_PA))
///     - 2 (2^{2N} - 1) log2(L + 1)
/// ```
pub fn key_length_nsixstate(
    config: &ProtocolConfig,
    stats: &ObservedStats,
    budget: &SecurityBudget,
) -> Result<KeyLengthResult> {
    if config.kind != ProtocolKind::NSixState {
        return Err(Error::Config(format!("expected an N-six-state configuration, got {}", config.kind)));
    }
    let counts = config.counts()?;
    stats.validate(config.parties, Some(&counts))?;
    let parties = config.parties;
    let eps_bar = budget.eps_bar()?;
    let eps_pe = budget.eps_pe(ProtocolKind::NSixState, parties)?;
    let eps_rob = budget.eps_rob(ProtocolKind::NSixState, parties)?;
    let eps_tot = epsilon_total_nsixstate(budget, parties, config.total_rounds)?;
    let n = counts.n as f64;

    let mut terms = KeyLengthTerms {
        ec_log_term: -ec_log(parties, budget.eps_ec),
        pa_term: -pa_log(eps_rob, budget.eps_pa)?,
        ps_penalty: -2.0 * postselection_exponent(parties) * (config.total_rounds as f64 + 1.0).log2(),
        preshared_cost: preshared_cost(config.total_rounds, config.second_type_prob),
        ..KeyLengthTerms::default()
    };

    let Some(inf) = gamma_pe_infimum(stats, budget, parties, &counts)? else {
        terms.min_entropy_term = f64::NEG_INFINITY;
        return Ok(KeyLengthResult::assemble(config, counts, terms, eps_pe, eps_tot, None));
    };

    let aep = 5.0 * (eps_bar.neg_log2() / n).sqrt();
    // eps_rob < 1 guarantees eps_PE < 1/2, so log2(1/(2 eps_PE)) > 0.
    let smoothing = 5f64.ln() / LN_2 * (2.0 * (eps_pe.neg_log2() - 1.0) / n).sqrt();
    terms.min_entropy_term = n * (inf.core_value - aep);
    terms.leakage_term = -n * (h2(inf.witness.p_ab) + smoothing);
    Ok(KeyLengthResult::assemble(config, counts, terms, eps_pe, eps_tot, Some(inf.witness)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::LogEps;
    use approx::assert_relative_eq;

    const ZERO: PeWidths = PeWidths {
        eta_z: 0.0,
        eta_x: 0.0,
        eta_z_prime: 0.0,
    };

    fn le(neg: f64) -> LogEps {
        LogEps::from_neg_log2(neg).unwrap()
    }

    #[test]
    fn expression_noiseless_and_boundary() {
        assert_eq!(six_state_entropy_expression(0.0, 0.0, 0.0), Some(1.0));
        // P_X = P_Z / 2: the second term vanishes by the 0 log 0 limit.
        let v = six_state_entropy_expression(0.0, 0.05, 0.1).unwrap();
        let expected = 0.9 * 0.9f64.log2() + 0.9 * (1.0 - 0.9f64.log2());
        assert_relative_eq!(v, expected, max_relative = 1e-15);
        // P_Z = 1 with P_X = 1/2: every term vanishes.
        assert_eq!(six_state_entropy_expression(0.0, 0.5, 1.0), Some(0.0));
    }

    #[test]
    fn expression_rejects_infeasible_points() {
        assert!(six_state_entropy_expression(0.0, 0.01, 0.1).is_none());
        assert!(six_state_entropy_expression(0.0, 0.9, 0.4).is_none());
        assert!(six_state_entropy_expression(0.0, 0.5, 1.2).is_none());
        assert!(six_state_entropy_expression(1.5, 0.1, 0.1).is_none());
    }

    #[test]
    fn degenerate_box_is_a_single_point() {
        let inf = infimum_over_box(&[0.03, 0.02], 0.04, 0.05, &ZERO).unwrap();
        assert_eq!(inf.witness.p_ab, 0.03);
        assert_eq!(inf.witness.p_x, 0.04);
        assert_eq!(inf.witness.p_z, 0.05);
        assert_eq!(inf.value, six_state_entropy_expression(0.03, 0.04, 0.05).unwrap());
    }

    #[test]
    fn worst_pab_is_endpoint_nearest_half() {
        let w = PeWidths {
            eta_z: 0.1,
            eta_x: 0.0,
            eta_z_prime: 0.0,
        };
        let inf = infimum_over_box(&[0.4], 0.1, 0.1, &w).unwrap();
        assert_eq!(inf.witness.p_ab, 0.5);
        let inf = infimum_over_box(&[0.1], 0.1, 0.1, &w).unwrap();
        assert_relative_eq!(inf.witness.p_ab, 0.3, max_relative = 1e-15);
    }

    #[test]
    fn infeasible_box() {
        // P_X can be at most 0.01 while P_Z >= 0.3 needs P_X >= 0.15.
        let w = PeWidths {
            eta_z: 0.0,
            eta_x: 0.005,
            eta_z_prime: 0.0,
        };
        assert!(infimum_over_box(&[0.0], 0.0, 0.3, &w).is_none());
        // Q_AB far above 1/2 leaves an empty P_AB interval.
        assert!(infimum_over_box(&[0.9], 0.1, 0.1, &ZERO).is_none());
    }

    #[test]
    fn witness_respects_feasibility_across_boundary() {
        let w = PeWidths {
            eta_z: 0.005,
            eta_x: 0.01,
            eta_z_prime: 0.02,
        };
        // Box straddles P_X = P_Z / 2.
        let inf = infimum_over_box(&[0.05], 0.05, 0.1, &w).unwrap();
        let p = inf.witness;
        assert!(p.p_x >= p.p_z / 2.0);
        assert!(1.0 - p.p_z / 2.0 - p.p_x >= 0.0);
    }

    #[test]
    fn key_length_postselection_penalty() {
        let budget = SecurityBudget::uniform(le(60.0));
        let stats = ObservedStats::symmetric(0.0, 0.0, 0.0);
        let cfg = ProtocolConfig::new(ProtocolKind::NSixState, 2, 1_000_000, 0.05).unwrap();
        let r = key_length_nsixstate(&cfg, &stats, &budget).unwrap();
        assert_relative_eq!(r.terms.ps_penalty, -2.0 * 15.0 * 1_000_001f64.log2(), max_relative = 1e-15);
        assert_relative_eq!(-r.terms.ps_penalty, 597.9, epsilon = 0.05);
        let cfg = ProtocolConfig::new(ProtocolKind::NSixState, 5, 1_000_000, 0.05).unwrap();
        let r = key_length_nsixstate(&cfg, &stats, &budget).unwrap();
        assert_relative_eq!(-r.terms.ps_penalty, 40_780.0, epsilon = 0.05);
        assert_relative_eq!(r.raw_length, r.terms.raw());
    }

    #[test]
    fn infeasible_statistics_give_zero_rate() {
        let budget = SecurityBudget::uniform(le(60.0));
        let cfg = ProtocolConfig::new(ProtocolKind::NSixState, 3, 100_000_000, 0.05).unwrap();
        // Q_X far below Q_Z / 2 with tight boxes.
        let stats = ObservedStats::symmetric(0.05, 0.0, 0.4);
        let r = key_length_nsixstate(&cfg, &stats, &budget).unwrap();
        assert_eq!(r.raw_length, f64::NEG_INFINITY);
        assert_eq!(r.rate, 0.0);
        assert!(r.witness.is_none());
    }

    #[test]
    fn needs_six_state_budget() {
        let cfg = ProtocolConfig::new(ProtocolKind::NSixState, 3, 100_000, 0.05).unwrap();
        let b = SecurityBudget::nbb84(le(60.0), le(60.0), le(60.0), le(60.0));
        assert!(key_length_nsixstate(&cfg, &ObservedStats::symmetric(0.0, 0.0, 0.0), &b).is_err());
    }
}
