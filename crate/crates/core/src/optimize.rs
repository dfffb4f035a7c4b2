//! Finite-key rate maximisation at a fixed total security parameter, and the
//! crossover round count `L_bar` above which the six-state protocol
//! overtakes N-BB84.
//!
//! The total budget `eps_tot` is split by explicit shares, so every evaluated
//! point satisfies its security statement exactly; there is no penalty term.
//! The search is a multi-start coordinate ascent with golden-section line
//! searches over `ln p` and softmax logits of the shares. It needs no
//! derivatives, which matters because the key length has kinks wherever an
//! entropy argument saturates at 1/2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_key::{
    epsilon_total, key_length, postselection_exponent, KeyLengthResult, ObservedStats, ProtocolConfig,
    ProtocolKind, SecurityBudget,
};
use crate::noise::{expected_observed_stats, NoiseModel, NoiseScenario};
use crate::numerics::LogEps;

/// Default total security parameter.
pub const DEFAULT_EPS_TOT: f64 = 5e-9;

/// Half-range of the share logits (natural log units).
const LOGIT_SPAN: f64 = 40.0;
/// Largest admissible second-type probability.
const P_MAX: f64 = 0.49;
const MAX_SWEEPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Objective evaluations allowed per start.
    pub max_evaluations: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 5000,
            starts: 8,
            seed: 0,
        }
    }
}

/// How `eps_tot` and the test-round probability are split.
///
/// `top` weights the outer composition:
/// `[2 eps_PE, eps_EC, eps_PA]` for N-BB84 and
/// `[2 eps_bar, eps_PE, eps_EC, eps_PA]` for six-state (both before the
/// postselection factor). `pe_split` divides the estimation failure:
/// `[(N-1) eps_z, eps_x]` as fractions of `eps_PE^2` for N-BB84,
/// `[eps_z', (N-1) eps_z, eps_x]` as fractions of `eps_PE` for six-state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetShares {
    pub p: f64,
    pub top: Vec<f64>,
    pub pe_split: Vec<f64>,
}

fn arity(kind: ProtocolKind) -> (usize, usize) {
    match kind {
        ProtocolKind::NBb84 => (3, 2),
        ProtocolKind::NSixState => (4, 3),
    }
}

impl BudgetShares {
    pub fn equal(kind: ProtocolKind, p: f64) -> Self {
        let (t, s) = arity(kind);
        Self {
            p,
            top: vec![1.0 / t as f64; t],
            pe_split: vec![1.0 / s as f64; s],
        }
    }

    fn validate(&self, kind: ProtocolKind) -> Result<()> {
        let (t, s) = arity(kind);
        let ok = |w: &[f64], len: usize| {
            w.len() == len && w.iter().all(|&x| x > 0.0 && x <= 1.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-9
        };
        if !ok(&self.top, t) || !ok(&self.pe_split, s) {
            return Err(Error::Budget(format!("shares {self:?} are not positive simplex weights for {kind}")));
        }
        Ok(())
    }
}

/// Splits `eps_tot` into component parameters according to `shares`.
///
/// Every component is shaved by a relative `margin` so floating-point
/// rounding in the recomposition cannot exceed the target.
fn allocate_with_margin(
    kind: ProtocolKind,
    parties: u32,
    total_rounds: u64,
    eps_tot: LogEps,
    shares: &BudgetShares,
    margin: f64,
) -> Result<SecurityBudget> {
    let lb = |w: f64| -w.log2();
    let bobs = f64::from(parties - 1).log2();
    let le = LogEps::from_neg_log2;
    match kind {
        ProtocolKind::NBb84 => {
            let t = eps_tot.neg_log2() + margin;
            let pe = t + 1.0 + lb(shares.top[0]);
            Ok(SecurityBudget::nbb84(
                le(2.0 * pe + lb(shares.pe_split[0]) + bobs)?,
                le(2.0 * pe + lb(shares.pe_split[1]))?,
                le(t + lb(shares.top[1]))?,
                le(t + lb(shares.top[2]))?,
            ))
        }
        ProtocolKind::NSixState => {
            let inner =
                eps_tot.neg_log2() + postselection_exponent(parties) * (total_rounds as f64 + 1.0).log2() + margin;
            let pe = inner + lb(shares.top[1]);
            Ok(SecurityBudget::six_state(
                le(inner + 1.0 + lb(shares.top[0]))?,
                le(pe + lb(shares.pe_split[1]) + bobs)?,
                le(pe + lb(shares.pe_split[2]))?,
                le(pe + lb(shares.pe_split[0]))?,
                le(inner + lb(shares.top[2]))?,
                le(inner + lb(shares.top[3]))?,
            ))
        }
    }
}

/// The component budget realising `shares` of `eps_tot`; its composed total never exceeds `eps_tot`.
pub fn allocate_budget(
    kind: ProtocolKind,
    parties: u32,
    total_rounds: u64,
    eps_tot: LogEps,
    shares: &BudgetShares,
) -> Result<SecurityBudget> {
    shares.validate(kind)?;
    let config = ProtocolConfig {
        kind,
        parties,
        total_rounds,
        second_type_prob: shares.p,
    };
    let mut margin = 1e-9;
    for _ in 0..6 {
        let budget = allocate_with_margin(kind, parties, total_rounds, eps_tot, shares, margin)?;
        if epsilon_total(&budget, &config)?.meets(eps_tot) {
            return Ok(budget);
        }
        margin *= 16.0;
    }
    Err(Error::Budget("could not allocate shares within the target".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedRate {
    /// Best rate, clamped at zero.
    pub rate: f64,
    /// Best net length per round before clamping.
    pub signed_rate: f64,
    pub shares: BudgetShares,
    pub result: KeyLengthResult,
    /// Objective evaluations summed over all starts.
    pub evaluations: usize,
    pub best_start: usize,
}

/// A point visited by the optimizer.
#[derive(Debug, Clone)]
pub struct EvaluatedPoint {
    pub shares: BudgetShares,
    pub budget: SecurityBudget,
    pub result: KeyLengthResult,
}

/// Search space: `x[0] = ln p`, then free logits of `top` and of `pe_split`
/// (the first logit of each group is pinned at zero).
struct Problem<'a> {
    kind: ProtocolKind,
    parties: u32,
    total_rounds: u64,
    stats: &'a ObservedStats,
    eps_tot: LogEps,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn softmax_with_pinned(free: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = std::iter::once(0.0).chain(free.iter().copied()).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl<'a> Problem<'a> {
    fn new(kind: ProtocolKind, parties: u32, total_rounds: u64, stats: &'a ObservedStats, eps_tot: LogEps) -> Result<Self> {
        if parties < 2 {
            return Err(Error::Config(format!("need at least 2 parties, got {parties}")));
        }
        let min_tests = match kind {
            ProtocolKind::NBb84 => 1.0,
            ProtocolKind::NSixState => 2.0,
        };
        let l = total_rounds as f64;
        let p_min = (min_tests + 0.5) / l;
        // n = L - 2 floor(L p) >= 1
        let p_max = P_MAX.min((l - 1.5) / (2.0 * l));
        if !(p_min < p_max) {
            return Err(Error::Config(format!(
                "L = {total_rounds} is too small to hold test and key rounds"
            )));
        }
        stats.validate(parties, None)?;
        let (t, s) = arity(kind);
        let dims = 1 + (t - 1) + (s - 1);
        let mut lower = vec![-LOGIT_SPAN; dims];
        let mut upper = vec![LOGIT_SPAN; dims];
        lower[0] = p_min.ln();
        upper[0] = p_max.ln();
        Ok(Self {
            kind,
            parties,
            total_rounds,
            stats,
            eps_tot,
            lower,
            upper,
        })
    }

    fn shares(&self, x: &[f64]) -> BudgetShares {
        let (t, _) = arity(self.kind);
        BudgetShares {
            p: x[0].exp(),
            top: softmax_with_pinned(&x[1..t]),
            pe_split: softmax_with_pinned(&x[t..]),
        }
    }

    fn encode(&self, shares: &BudgetShares) -> Vec<f64> {
        let logits = |w: &[f64]| -> Vec<f64> { w[1..].iter().map(|&v| (v / w[0]).ln()).collect() };
        let mut x = vec![shares.p.ln()];
        x.extend(logits(&shares.top));
        x.extend(logits(&shares.pe_split));
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
        x
    }

    fn evaluate(&self, x: &[f64]) -> Option<EvaluatedPoint> {
        let shares = self.shares(x);
        let budget = allocate_budget(self.kind, self.parties, self.total_rounds, self.eps_tot, &shares).ok()?;
        let config = ProtocolConfig::new(self.kind, self.parties, self.total_rounds, shares.p).ok()?;
        let result = key_length(&config, self.stats, &budget).ok()?;
        Some(EvaluatedPoint { shares, budget, result })
    }

    fn objective(&self, point: &Option<EvaluatedPoint>) -> f64 {
        match point {
            Some(p) if p.result.net_length.is_finite() => p.result.net_length / self.total_rounds as f64,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Van der Corput radical inverse in the given base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    inv = out;
    inv
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

struct StartOutcome {
    x: Vec<f64>,
    value: f64,
    best: Option<EvaluatedPoint>,
    evaluations: usize,
}

type Observer<'o> = Option<&'o (dyn Fn(&EvaluatedPoint) + Sync)>;

fn coordinate_ascent(problem: &Problem<'_>, start: Vec<f64>, budget: usize, observer: Observer<'_>) -> StartOutcome {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| -> (f64, Option<EvaluatedPoint>) {
        evaluations.set(evaluations.get() + 1);
        let point = problem.evaluate(x);
        if let (Some(obs), Some(p)) = (observer, point.as_ref()) {
            obs(p);
        }
        (problem.objective(&point), point)
    };

    let mut x = start;
    let (mut value, mut best) = eval(&x);
    let dims = x.len();
    let mut widths: Vec<f64> = (0..dims).map(|d| problem.upper[d] - problem.lower[d]).collect();

    'sweeps: for _ in 0..MAX_SWEEPS {
        let before = value;
        for d in 0..dims {
            let lo = (x[d] - widths[d]).max(problem.lower[d]);
            let hi = (x[d] + widths[d]).min(problem.upper[d]);
            let tol = 1e-5 * (problem.upper[d] - problem.lower[d]);
            let mut trial = x.clone();
            let probe = |t: f64, trial: &mut Vec<f64>| {
                trial[d] = t;
                eval(trial)
            };
            let (mut a, mut b) = (lo, hi);
            let mut c = b - INV_PHI * (b - a);
            let mut e = a + INV_PHI * (b - a);
            let (mut fc, mut pc) = probe(c, &mut trial);
            let (mut fe, mut pe) = probe(e, &mut trial);
            let mut used = 2;
            while b - a > tol && used < 80 {
                if fc >= fe {
                    b = e;
                    e = c;
                    fe = fc;
                    pe = pc;
                    c = b - INV_PHI * (b - a);
                    (fc, pc) = probe(c, &mut trial);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    pc = pe;
                    e = a + INV_PHI * (b - a);
                    (fe, pe) = probe(e, &mut trial);
                }
                used += 1;
            }
            let (t, ft, pt) = if fc >= fe { (c, fc, pc) } else { (e, fe, pe) };
            if ft > value {
                x[d] = t;
                value = ft;
                best = pt;
            }
            if evaluations.get() >= budget {
                break 'sweeps;
            }
        }
        for w in widths.iter_mut() {
            *w *= 0.5;
        }
        let gain = value - before;
        if value.is_finite() && gain <= 1e-13 * value.abs().max(1e-6) && widths[0] < 0.1 {
            break;
        }
    }
    StartOutcome {
        x,
        value,
        best,
        evaluations: evaluations.get(),
    }
}

/// Default second-type probability used by the equal-shares start.
pub fn default_test_probability(total_rounds: u64) -> f64 {
    (total_rounds as f64).powf(-1.0 / 3.0).clamp(1e-12, 0.25)
}

#[allow(clippy::too_many_arguments)]
fn optimize_impl(
    kind: ProtocolKind,
    parties: u32,
    total_rounds: u64,
    stats: &ObservedStats,
    eps_tot: LogEps,
    search: &SearchConfig,
    warm: &[BudgetShares],
    observer: Observer<'_>,
) -> Result<OptimizedRate> {
    let problem = Problem::new(kind, parties, total_rounds, stats, eps_tot)?;
    let dims = problem.lower.len();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let shift: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();

    let starts: Vec<Vec<f64>> = (0..search.starts.max(1))
        .map(|s| {
            if s == 0 {
                let p0 = default_test_probability(total_rounds);
                problem.encode(&BudgetShares::equal(kind, p0))
            } else {
                (0..dims)
                    .map(|d| {
                        let u = (radical_inverse(s as u64, PRIMES[d % PRIMES.len()]) + shift[d]).fract();
                        problem.lower[d] + u * (problem.upper[d] - problem.lower[d])
                    })
                    .collect()
            }
        })
        .chain(warm.iter().map(|w| problem.encode(w)))
        .collect();

    let outcomes: Vec<StartOutcome> = starts
        .into_par_iter()
        .map(|x0| coordinate_ascent(&problem, x0, search.max_evaluations, observer))
        .collect();

    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let mut best_start = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best_start].value {
            best_start = i;
        }
    }
    let winner = &outcomes[best_start];
    let point = match &winner.best {
        Some(p) => p.clone(),
        None => problem
            .evaluate(&winner.x)
            .ok_or_else(|| Error::Config(format!("no evaluable point for {kind} at L = {total_rounds}")))?,
    };
    let signed_rate = winner.value;
    Ok(OptimizedRate {
        rate: signed_rate.max(0.0),
        signed_rate,
        shares: point.shares,
        result: point.result,
        evaluations,
        best_start,
    })
}

/// Maximises the net key rate over `p` and the split of `eps_tot`.
pub fn optimize_rate(
    kind: ProtocolKind,
    parties: u32,
    total_rounds: u64,
    stats: &ObservedStats,
    eps_tot: LogEps,
    search: &SearchConfig,
) -> Result<OptimizedRate> {
    optimize_impl(kind, parties, total_rounds, stats, eps_tot, search, &[], None)
}

/// As [`optimize_rate`] with extra starts at the given shares, run after the
/// regular ones (a previous optimum is a good start for a nearby `L`).
pub fn optimize_rate_warm(
    kind: ProtocolKind,
    parties: u32,
    total_rounds: u64,
    stats: &ObservedStats,
    eps_tot: LogEps,
    search: &SearchConfig,
    warm: &[BudgetShares],
) -> Result<OptimizedRate> {
    for w in warm {
        w.validate(kind)?;
    }
    optimize_impl(kind, parties, total_rounds, stats, eps_tot, search, warm, None)
}

/// As [`optimize_rate`], reporting every evaluated point to `observer`.
pub fn optimize_rate_observed(
    kind: ProtocolKind,
    parties: u32,
    total_rounds: u64,
    stats: &ObservedStats,
    eps_tot: LogEps,
    search: &SearchConfig,
    observer: &(dyn Fn(&EvaluatedPoint) + Sync),
) -> Result<OptimizedRate> {
    optimize_impl(kind, parties, total_rounds, stats, eps_tot, search, &[], Some(observer))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// First round count of the geometric scan.
    pub l_min: u64,
    /// Give up above this many rounds.
    pub l_max: u64,
    pub search: SearchConfig,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            l_min: 1 << 10,
            l_max: 100_000_000_000_000,
            search: SearchConfig::default(),
        }
    }
}

/// Optimized rates of both protocols at one round count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub total_rounds: u64,
    pub bb84: f64,
    pub six_state: f64,
}

impl RatePair {
    /// Six-state at least as good as N-BB84, with both producing key.
    pub fn six_state_wins(&self) -> bool {
        self.bb84 > 0.0 && self.six_state > 0.0 && self.six_state >= self.bb84
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub l_bar: u64,
    /// Last scanned round count below `l_bar` where N-BB84 still wins.
    pub below: RatePair,
    pub at: RatePair,
    /// The ordering re-checked at `2 l_bar` and `4 l_bar`.
    pub verification: [RatePair; 2],
}

/// Statistics implied by a pairwise error frequency under global depolarizing noise.
pub fn global_model_stats(q_ab: f64, parties: u32) -> Result<ObservedStats> {
    let scenario = NoiseScenario::from_pair_error(NoiseModel::Global, q_ab, parties)?;
    Ok(expected_observed_stats(&scenario))
}

pub fn rate_pair(stats: &ObservedStats, parties: u32, total_rounds: u64, eps_tot: LogEps, search: &SearchConfig) -> RatePair {
    let rate = |kind| {
        optimize_rate(kind, parties, total_rounds, stats, eps_tot, search)
            .map(|o| o.rate)
            .unwrap_or(0.0)
    };
    RatePair {
        total_rounds,
        bb84: rate(ProtocolKind::NBb84),
        six_state: rate(ProtocolKind::NSixState),
    }
}

/// Smallest `L` at which the optimized six-state rate reaches the optimized
/// N-BB84 rate (both positive), with the global-noise relations fixing `Q_X`
/// and `Q_Z` from `q_ab`.
///
/// Scans `L` geometrically (factor 2), bisects the first crossing on
/// `log2 L` down to a 1% bracket, and accepts it only if the ordering still
/// holds at twice and four times the crossing. Returns `None` when no
/// verified crossing exists up to `l_max`.
pub fn threshold_l(q_ab: f64, parties: u32, eps_tot: LogEps, config: &ThresholdConfig) -> Result<Option<Threshold>> {
    if !(q_ab > 0.0 && q_ab < 0.5) {
        return Err(Error::Config(format!("q_ab must lie in (0, 1/2), got {q_ab}")));
    }
    let stats = global_model_stats(q_ab, parties)?;
    let pair = |l: u64| rate_pair(&stats, parties, l, eps_tot, &config.search);

    let mut prev = pair(config.l_min);
    let mut l = config.l_min;
    while l < config.l_max {
        let next_l = l.saturating_mul(2).min(config.l_max);
        let next = pair(next_l);
        if !prev.six_state_wins() && next.six_state_wins() {
            let (mut lo, mut hi) = (prev, next);
            while hi.total_rounds as f64 > 1.01 * lo.total_rounds as f64 {
                let mid_l = ((lo.total_rounds as f64).log2() * 0.5 + (hi.total_rounds as f64).log2() * 0.5).exp2();
                let mid = pair(mid_l.round() as u64);
                if mid.six_state_wins() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let verification = [
                pair(hi.total_rounds.saturating_mul(2)),
                pair(hi.total_rounds.saturating_mul(4)),
            ];
            if verification.iter().all(RatePair::six_state_wins) {
                return Ok(Some(Threshold {
                    l_bar: hi.total_rounds,
                    below: lo,
                    at: hi,
                    verification,
                }));
            }
        }
        prev = next;
        l = next_l;
    }
    Ok(None)
}
