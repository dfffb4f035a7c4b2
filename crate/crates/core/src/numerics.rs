//! Scalar building blocks shared by every evaluator.
//!
//! Security parameters in the six-state analysis routinely fall below
//! `1e-1000`, far under the smallest positive `f64`. They are therefore never
//! materialised: a [`LogEps`] stores `log2(1/eps)` and all compositions happen
//! in that domain.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A probability-like security parameter `eps` in `(0, 1]`, stored as `log2(1/eps)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LogEps {
    neg_log2: f64,
}

impl LogEps {
    /// `eps = 1`.
    pub const ONE: LogEps = LogEps { neg_log2: 0.0 };

    pub fn from_neg_log2(neg_log2: f64) -> Result<Self> {
        if !neg_log2.is_finite() || neg_log2 < 0.0 {
            return Err(domain(
                "LogEps::from_neg_log2",
                format!("log2(1/eps) must be finite and non-negative, got {neg_log2}"),
            ));
        }
        Ok(Self { neg_log2 })
    }

    /// Encodes a directly representable `eps` in `(0, 1]`.
    pub fn from_eps(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(domain(
                "LogEps::from_eps",
                format!("eps must lie in (0, 1], got {eps}"),
            ));
        }
        Ok(Self {
            neg_log2: -eps.log2(),
        })
    }

    /// Encodes `eps` given `ln(1/eps)`.
    pub fn from_ln_inv(ln_inv: f64) -> Result<Self> {
        Self::from_neg_log2(ln_inv / LN_2)
    }

    #[inline]
    pub fn neg_log2(self) -> f64 {
        self.neg_log2
    }

    /// `ln(1/eps)`.
    #[inline]
    pub fn ln_inv(self) -> f64 {
        self.neg_log2 * LN_2
    }

    /// The plain value; underflows to zero below roughly `2^-1074`.
    pub fn to_eps(self) -> f64 {
        (-self.neg_log2).exp2()
    }

    /// `factor * eps` for `0 < factor <= 1`.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(domain(
                "LogEps::scaled",
                format!("factor must lie in (0, 1], got {factor}"),
            ));
        }
        Self::from_neg_log2(self.neg_log2 - factor.log2())
    }
}

impl TryFrom<f64> for LogEps {
    type Error = Error;

    fn try_from(neg_log2: f64) -> Result<Self> {
        Self::from_neg_log2(neg_log2)
    }
}

impl From<LogEps> for f64 {
    fn from(e: LogEps) -> f64 {
        e.neg_log2
    }
}

/// `log2(1/sum)` for `sum = sum_i c_i * 2^-a_i`; may be negative when the sum exceeds one.
pub(crate) fn log2_inv_sum(terms: &[(f64, f64)]) -> f64 {
    // Pivot on the largest term so the remaining ratios are <= 1.
    let pivot = terms
        .iter()
        .map(|&(c, a)| a - c.log2())
        .fold(f64::INFINITY, f64::min);
    let acc: f64 = terms
        .iter()
        .map(|&(c, a)| (pivot - (a - c.log2())).exp2())
        .sum();
    pivot - acc.log2()
}

/// `sum_i c_i * eps_i`, composed without leaving the log domain.
///
/// Fails only when the composed value exceeds one, which a [`LogEps`] cannot hold.
pub fn eps_sum(terms: &[(f64, LogEps)]) -> Result<LogEps> {
    if terms.is_empty() {
        return Err(domain("eps_sum", "empty term list"));
    }
    if let Some(&(c, _)) = terms.iter().find(|(c, _)| !(*c > 0.0 && c.is_finite())) {
        return Err(domain("eps_sum", format!("coefficient must be positive, got {c}")));
    }
    let raw: Vec<(f64, f64)> = terms.iter().map(|&(c, e)| (c, e.neg_log2)).collect();
    let neg = log2_inv_sum(&raw);
    if neg < 0.0 {
        return Err(domain("eps_sum", format!("sum exceeds one (log2(1/sum) = {neg})")));
    }
    // A one-term sum of eps itself should round-trip exactly.
    Ok(LogEps {
        neg_log2: neg.max(0.0),
    })
}

/// `sqrt(eps)`.
pub fn eps_sqrt(eps: LogEps) -> LogEps {
    LogEps {
        neg_log2: 0.5 * eps.neg_log2,
    }
}

/// `log2(1 - eps)`.
pub fn log2_one_minus(eps: LogEps) -> Result<f64> {
    if eps.neg_log2 <= 0.0 {
        return Err(domain("log2_one_minus", "eps must be below one"));
    }
    if eps.neg_log2 > 53.0 {
        // ln(1 - e) = -e - e^2/2 - ...; the quadratic term is below f64 resolution.
        Ok(-eps.to_eps() / LN_2)
    } else {
        Ok((-eps.to_eps()).ln_1p() / LN_2)
    }
}

/// `x log2 x` with the limit value 0 at `x = 0`; no domain check.
#[inline]
pub(crate) fn xlog2x_unchecked(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `x log2 x`, zero at `x = 0`.
pub fn xlog2x(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain("xlog2x", format!("x must be a finite non-negative number, got {x}")));
    }
    Ok(xlog2x_unchecked(x))
}

/// Binary entropy without the domain check; callers guarantee `p` in `[0, 1]`.
#[inline]
pub(crate) fn h2(p: f64) -> f64 {
    -xlog2x_unchecked(p) - xlog2x_unchecked(1.0 - p)
}

/// Binary Shannon entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain("binary_entropy", format!("p must lie in [0, 1], got {p}")));
    }
    Ok(h2(p))
}

/// Sampling-without-replacement deviation `xi(eps, n, m)`:
/// `sqrt((n + m)(m + 1) / (8 n m^2) * ln(1/eps))`.
pub fn xi_correction(eps: LogEps, n: u64, m: u64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(domain("xi_correction", format!("counts must be positive (n = {n}, m = {m})")));
    }
    let (n, m) = (n as f64, m as f64);
    Ok(((n + m) * (m + 1.0) / (8.0 * n * m * m) * eps.ln_inv()).sqrt())
}

/// Multinomial-type deviation `eta(eps, d, m) = sqrt((ln(1/eps) + d ln(m + 1)) / (8 m))`.
pub fn eta_correction(eps: LogEps, d: u32, m: u64) -> Result<f64> {
    if m == 0 {
        return Err(domain("eta_correction", "sample size must be positive"));
    }
    let m = m as f64;
    let radicand = (eps.ln_inv() + d as f64 * m.ln_1p()) / (8.0 * m);
    if radicand < 0.0 {
        return Err(domain("eta_correction", format!("negative radicand {radicand}")));
    }
    Ok(radicand.sqrt())
}
