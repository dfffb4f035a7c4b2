use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{batch_rng, batches};
use crate::error::{domain, Result};
use crate::numerics::{xi_correction, LogEps};

const LABEL: u64 = 3;

/// Violation counts of the three tail bounds for sampling without replacement.
///
/// With `Lambda_m` the relative weight of the sample and `Lambda_n` that of
/// the rest:
/// - two-sided: `|Lambda_n - Lambda_m| / 2 > xi(eps, n, m)`, bound `2 eps`;
/// - upper: `Lambda_n > Lambda_m + 2 xi(eps, n, m)`, bound `eps`;
/// - lower: `Lambda_m > Lambda_n + 2 xi(eps, m, n)`, bound `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub trials: u64,
    pub violations: [u64; 3],
    pub bounds: [f64; 3],
    pub xi_nm: f64,
    pub xi_mn: f64,
}

impl SamplingReport {
    pub fn frequencies(&self) -> [f64; 3] {
        self.violations.map(|v| v as f64 / self.trials as f64)
    }

    /// Whether every frequency is within its bound plus `sigmas` binomial deviations.
    pub fn within(&self, sigmas: f64) -> bool {
        self.frequencies()
            .iter()
            .zip(self.bounds)
            .all(|(&f, b)| f <= b + sigmas * super::binomial_sigma(b.min(1.0), self.trials))
    }
}

/// Draws `m` of the `total` positions of a string with `weight` ones,
/// `trials` times, and counts violations of each tail bound.
pub fn sampling_lemma_experiment(
    total: u64,
    m: u64,
    weight: u64,
    trials: u64,
    eps: LogEps,
    seed: u64,
) -> Result<SamplingReport> {
    if weight > total {
        return Err(domain("sampling_lemma_experiment", format!("weight {weight} exceeds length {total}")));
    }
    if !(1..total).contains(&m) {
        return Err(domain("sampling_lemma_experiment", format!("sample size {m} outside [1, {total})")));
    }
    let n = total - m;
    let xi_nm = xi_correction(eps, n, m)?;
    let xi_mn = xi_correction(eps, m, n)?;
    let violations = batches(trials)
        .into_par_iter()
        .map(|(b, size)| {
            let mut rng = batch_rng(seed, LABEL, b);
            let mut v = [0u64; 3];
            for _ in 0..size {
                // The ones occupy positions [0, weight).
                let hits = sample(&mut rng, total as usize, m as usize)
                    .iter()
                    .filter(|&i| (i as u64) < weight)
                    .count() as u64;
                let lam_m = hits as f64 / m as f64;
                let lam_n = (weight - hits) as f64 / n as f64;
                v[0] += u64::from(0.5 * (lam_n - lam_m).abs() > xi_nm);
                v[1] += u64::from(lam_n > lam_m + 2.0 * xi_nm);
                v[2] += u64::from(lam_m > lam_n + 2.0 * xi_mn);
            }
            v
        })
        .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let e = eps.to_eps();
    Ok(SamplingReport {
        trials,
        violations,
        bounds: [2.0 * e, e, e],
        xi_nm,
        xi_mn,
    })
}
