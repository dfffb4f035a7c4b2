use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{batch_rng, batches};
use crate::error::{domain, Result};
use crate::numerics::LogEps;

const LABEL: u64 = 4;
pub const MAX_KEY_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ECToyReport {
    pub trials: u64,
    /// Trials where no Bob aborted but at least one guessed a wrong key.
    pub failures: u64,
    /// Trials where some Bob found no candidate consistent with the hash.
    pub aborts: u64,
    pub failure_freq: f64,
    pub abort_freq: f64,
    /// Hash length `z_EC` sent by Alice.
    pub leakage_bits: u32,
    pub ball_size: u64,
    /// `z_EC >= key_bits`: the hash can reveal the whole key.
    pub degenerate: bool,
}

/// All error patterns of weight at most `radius` on `bits` bits.
fn ball(bits: u32, radius: u32) -> Vec<u32> {
    (0u32..1 << bits).filter(|e| e.count_ones() <= radius).collect()
}

/// Applies the binary matrix with the given columns to `x`.
fn hash(columns: &[u64], x: u32) -> u64 {
    columns
        .iter()
        .enumerate()
        .filter(|(j, _)| (x >> j) & 1 == 1)
        .fold(0, |acc, (_, c)| acc ^ c)
}

/// One-way error correction by random linear hashing, with each Bob decoding
/// by exhaustive search over a Hamming ball around his own key.
pub fn ec_toy_run(
    parties: u32,
    key_bits: u32,
    q: f64,
    eps_ec: LogEps,
    radius: u32,
    trials: u64,
    seed: u64,
) -> Result<ECToyReport> {
    if parties < 2 {
        return Err(domain("ec_toy_run", format!("need at least 2 parties, got {parties}")));
    }
    if !(1..=MAX_KEY_BITS).contains(&key_bits) {
        return Err(domain("ec_toy_run", format!("key length {key_bits} outside [1, {MAX_KEY_BITS}]")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(domain("ec_toy_run", format!("flip probability {q} outside [0, 1]")));
    }
    let patterns = ball(key_bits, radius);
    let ball_size = patterns.len() as u64;
    let leak = (ball_size as f64).log2() + f64::from(parties - 1).log2() + eps_ec.neg_log2();
    let z = leak.ceil().max(0.0) as u32;
    if z > 64 {
        return Err(domain("ec_toy_run", format!("hash length {z} exceeds 64 bits")));
    }
    let row_mask = if z == 64 { u64::MAX } else { (1u64 << z) - 1 };
    let key_mask = (1u32 << key_bits) - 1;

    let (failures, aborts) = batches(trials)
        .into_par_iter()
        .map(|(b, size)| {
            let mut rng = batch_rng(seed, LABEL, b);
            let (mut fail, mut abort) = (0u64, 0u64);
            let mut candidates = Vec::with_capacity(patterns.len());
            for _ in 0..size {
                let x = rng.random::<u32>() & key_mask;
                let columns: Vec<u64> = (0..key_bits).map(|_| rng.random::<u64>() & row_mask).collect();
                let sent = hash(&columns, x);
                let (mut any_abort, mut any_wrong) = (false, false);
                for _ in 1..parties {
                    let noise = (0..key_bits).fold(0u32, |acc, j| acc | (u32::from(rng.random_bool(q)) << j));
                    let k = x ^ noise;
                    candidates.clear();
                    candidates.extend(patterns.iter().map(|e| k ^ e).filter(|&c| hash(&columns, c) == sent));
                    if candidates.is_empty() {
                        any_abort = true;
                    } else if candidates[rng.random_range(0..candidates.len())] != x {
                        any_wrong = true;
                    }
                }
                abort += u64::from(any_abort);
                fail += u64::from(!any_abort && any_wrong);
            }
            (fail, abort)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let freq = |c: u64| if trials == 0 { 0.0 } else { c as f64 / trials as f64 };
    Ok(ECToyReport {
        trials,
        failures,
        aborts,
        failure_freq: freq(failures),
        abort_freq: freq(aborts),
        leakage_bits: z,
        ball_size,
        degenerate: z >= key_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(neg: f64) -> LogEps {
        LogEps::from_neg_log2(neg).unwrap()
    }

    #[test]
    fn noiseless_keys_always_decode() {
        let r = ec_toy_run(3, 10, 0.0, eps(4.0), 0, 5_000, 1).unwrap();
        assert_eq!((r.failures, r.aborts), (0, 0));
        // A wider ball only admits hash collisions, at rate at most eps_EC.
        let r = ec_toy_run(3, 10, 0.0, eps(4.0), 2, 5_000, 1).unwrap();
        assert_eq!(r.aborts, 0);
        assert!(r.failure_freq <= 0.0625 + 3.0 * crate::simulate::binomial_sigma(0.0625, 5_000));
    }

    #[test]
    fn leakage_matches_formula() {
        // |ball(12, 3)| = 1 + 12 + 66 + 220 = 299.
        let r = ec_toy_run(3, 12, 0.05, eps(6.0), 3, 10, 0).unwrap();
        assert_eq!(r.ball_size, 299);
        assert_eq!(r.leakage_bits, (299f64.log2() + 1.0 + 6.0).ceil() as u32);
        assert!(r.degenerate);
        let r = ec_toy_run(2, 20, 0.01, eps(1.0), 1, 10, 0).unwrap();
        assert_eq!(r.leakage_bits, 6);
        assert!(!r.degenerate);
    }

    #[test]
    fn failure_stays_near_eps_when_not_degenerate() {
        let r = ec_toy_run(3, 20, 0.02, eps(3.0), 1, 4_000, 5).unwrap();
        let bound = 2f64.powi(-3);
        assert!(r.failure_freq <= bound + 3.0 * crate::simulate::binomial_sigma(bound, r.trials));
    }

    #[test]
    fn no_aborts_when_radius_covers_all_errors() {
        let r = ec_toy_run(4, 8, 0.1, eps(3.0), 8, 2_000, 2).unwrap();
        assert_eq!(r.aborts, 0);
    }

    #[test]
    fn reproducible() {
        let a = ec_toy_run(3, 12, 0.05, eps(6.0), 3, 3_000, 9).unwrap();
        assert_eq!(a, ec_toy_run(3, 12, 0.05, eps(6.0), 3, 3_000, 9).unwrap());
    }

    #[test]
    fn rejects_oversized_keys() {
        assert!(ec_toy_run(3, 21, 0.05, eps(6.0), 3, 1, 0).is_err());
    }
}
