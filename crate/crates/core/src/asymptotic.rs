//! Key rates in the limit of infinitely many rounds.

use crate::error::{Error, Result};
use crate::finite_key::six_state_entropy_expression;
use crate::noise::MarginalProbabilities;
use crate::numerics::h2;

/// `1 - h(P_X) - h(P_AB)`; equals `1 - 2 h(P_AB)` under global noise.
///
/// Takes no party count: the N-BB84 rate depends on `N` only through the
/// probabilities themselves.
pub fn rate_bb84_asymptotic(p_ab: f64, p_x: f64) -> f64 {
    1.0 - h2(p_x) - h2(p_ab)
}

/// Six-state rate with `P_AB` itself as the worst pairwise error; `None`
/// when the probabilities lie outside the region where the bound is defined.
pub fn rate_sixstate_asymptotic(probs: &MarginalProbabilities) -> Option<f64> {
    six_state_entropy_expression(probs.p_ab, probs.p_x, probs.p_z)
}

/// Bisection for the zero of a rate curve that is positive at `lo` and negative at `hi`.
pub fn find_rate_root<F>(rate: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    const TOL: f64 = 1e-6;
    let (f_lo, f_hi) = (rate(lo), rate(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let (mut a, mut b) = (lo, hi);
    // Run past TOL so the midpoint estimate is well inside it.
    while b - a > TOL * 1e-3 {
        let mid = 0.5 * (a + b);
        if rate(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{marginal_probabilities, NoiseModel, NoiseScenario};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn probs(model: NoiseModel, p_ab: f64, n: u32) -> MarginalProbabilities {
        marginal_probabilities(&NoiseScenario::from_pair_error(model, p_ab, n).unwrap())
    }

    #[test]
    fn anchors() {
        assert_eq!(rate_bb84_asymptotic(0.0, 0.0), 1.0);
        assert_eq!(rate_bb84_asymptotic(0.5, 0.5), -1.0);
        assert_eq!(rate_sixstate_asymptotic(&probs(NoiseModel::Global, 0.0, 4)), Some(1.0));
    }

    #[test]
    fn root_finder_on_linear_curve() {
        let r = find_rate_root(|p| 1.0 - 4.0 * p, 0.0, 0.5).unwrap();
        assert!((r - 0.25).abs() < 1e-6);
        assert!(find_rate_root(|p| 1.0 - 4.0 * p, 0.3, 0.5).is_err());
    }

    // Bisection roots, cross-checked against an mpmath findroot at 30 digits:
    // 1 - 2h(P) = 0 at 0.110027864..., and the N = 2 six-state rate at 0.126193083...
    #[test]
    fn asymptotic_roots() {
        let bb84 = find_rate_root(|p| rate_bb84_asymptotic(p, p), 0.0, 0.5).unwrap();
        assert_relative_eq!(bb84, 0.110_027_864, epsilon = 1e-6);
        let six = find_rate_root(
            |p| rate_sixstate_asymptotic(&probs(NoiseModel::Global, p, 2)).unwrap(),
            0.0,
            0.3,
        )
        .unwrap();
        assert_relative_eq!(six, 0.126_193_083, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn six_state_beats_bb84_under_global_noise(p in 1e-4f64..=0.1, n in 2u32..=8) {
            let pr = probs(NoiseModel::Global, p, n);
            let six = rate_sixstate_asymptotic(&pr).unwrap();
            prop_assert!(six >= rate_bb84_asymptotic(pr.p_ab, pr.p_x));
        }

        #[test]
        fn global_six_state_rate_grows_with_parties(p in 1e-4f64..=0.1, n in 2u32..=12) {
            let a = rate_sixstate_asymptotic(&probs(NoiseModel::Global, p, n)).unwrap();
            let b = rate_sixstate_asymptotic(&probs(NoiseModel::Global, p, n + 1)).unwrap();
            prop_assert!(b >= a - 1e-15);
        }

        #[test]
        fn local_rates_shrink_with_parties(p in 1e-3f64..=0.1, n in 2u32..=12) {
            let a = probs(NoiseModel::Local, p, n);
            let b = probs(NoiseModel::Local, p, n + 1);
            prop_assert!(rate_bb84_asymptotic(b.p_ab, b.p_x) <= rate_bb84_asymptotic(a.p_ab, a.p_x));
            let (sa, sb) = (rate_sixstate_asymptotic(&a), rate_sixstate_asymptotic(&b));
            if let (Some(sa), Some(sb)) = (sa, sb) {
                prop_assert!(sb <= sa);
            }
        }
    }
}
