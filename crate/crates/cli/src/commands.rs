use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use nqkd_core::asymptotic::{rate_bb84_asymptotic, rate_sixstate_asymptotic};
use nqkd_core::noise::{expected_observed_stats, marginal_probabilities};
use nqkd_core::optimize::{optimize_rate_warm, threshold_l, BudgetShares, SearchConfig, ThresholdConfig, DEFAULT_EPS_TOT};
use nqkd_core::simulate::{
    binomial_sigma, ec_toy_run, exact_marginals, sampling_lemma_experiment, simulate_rounds, simulate_statistics,
};
use nqkd_core::{LogEps, NoiseModel, NoiseScenario, ObservedStats, ProtocolConfig, ProtocolKind};

use crate::config::{as_count, Grid, RunConfig};
use crate::output::{Cell, Output, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateOp {
    /// Monte Carlo of the parameter-estimation rounds
    Rounds,
    /// Error probabilities from the exact density matrix
    Exact,
    /// Tail bounds for sampling without replacement
    Sampling,
    /// Toy error correction by random hashing
    EcToy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidateOp {
    Marginals,
    MonteCarlo,
    Sampling,
    EcToy,
    All,
}

const MC_SIGMAS: f64 = 5.0;
const BOUND_SIGMAS: f64 = 3.0;
const EXACT_TOL: f64 = 1e-12;

fn model(cfg: &RunConfig) -> Result<NoiseModel, CliError> {
    cfg.model.as_deref().unwrap_or("global").parse().map_err(CliError::from)
}

fn parties(cfg: &RunConfig, default: &[u32]) -> Result<Vec<u32>, CliError> {
    let list = if cfg.parties.is_empty() { default.to_vec() } else { cfg.parties.clone() };
    if let Some(bad) = list.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("party count {bad} is below 2")));
    }
    Ok(list)
}

fn grid(cfg: &RunConfig, default: &str) -> Result<Vec<f64>, CliError> {
    let values = match &cfg.qab {
        Some(g) => g.values()?,
        None => Grid::parse(default)?.values()?,
    };
    if let Some(bad) = values.iter().find(|q| !(0.0..=0.5).contains(*q)) {
        return Err(CliError::Usage(format!("pairwise error rate {bad} outside [0, 1/2]")));
    }
    Ok(values)
}

fn rounds(cfg: &RunConfig, default: &[f64]) -> Result<Vec<u64>, CliError> {
    let list = if cfg.rounds.is_empty() { default } else { &cfg.rounds };
    let mut out = list.iter().map(|&l| as_count("rounds", l)).collect::<Result<Vec<_>, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn probability(name: &str, value: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::Usage(format!("{name} = {value} is not a probability")))
    }
}

fn log_eps(name: &str, value: f64) -> Result<LogEps, CliError> {
    if value > 0.0 && value <= 1.0 {
        Ok(LogEps::from_eps(value)?)
    } else {
        Err(CliError::Usage(format!("{name} = {value} must lie in (0, 1]")))
    }
}

fn search(cfg: &RunConfig) -> SearchConfig {
    let d = SearchConfig::default();
    SearchConfig {
        max_evaluations: cfg.max_evals.unwrap_or(d.max_evaluations),
        starts: cfg.starts.unwrap_or(d.starts),
        seed: cfg.seed.unwrap_or(d.seed),
    }
}

fn display_rate(r: Option<f64>) -> f64 {
    r.unwrap_or(0.0).max(0.0)
}

/// Asymptotic rates of both protocols on a grid of pairwise error rates.
pub fn asymptotic(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = model(cfg)?;
    let parties = parties(cfg, &[2, 5, 8])?;
    let grid = grid(cfg, "0:0.15:0.005")?;
    let mut table = Table::new(&["model", "parties", "p_ab", "p_x", "p_z", "r_bb84", "r_sixstate"]);
    for &n in &parties {
        for &p in &grid {
            let probs = marginal_probabilities(&NoiseScenario::from_pair_error(model, p, n)?);
            table.push(vec![
                model.to_string().into(),
                n.into(),
                p.into(),
                probs.p_x.into(),
                probs.p_z.into(),
                display_rate(Some(rate_bb84_asymptotic(probs.p_ab, probs.p_x))).into(),
                display_rate(rate_sixstate_asymptotic(&probs)).into(),
            ]);
        }
    }
    Ok(Output {
        command: "asymptotic".into(),
        config: json!({"model": model, "parties": parties, "p_ab": grid}),
        table,
        passed: None,
    })
}

fn format_shares(s: &BudgetShares) -> String {
    let join = |w: &[f64]| w.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(";");
    format!("top={}|pe={}", join(&s.top), join(&s.pe_split))
}

fn finite_stats(cfg: &RunConfig, model: NoiseModel, q_ab: f64, n: u32) -> Result<ObservedStats, CliError> {
    match (cfg.qx, cfg.qz) {
        (Some(qx), Some(qz)) => Ok(ObservedStats::symmetric(
            q_ab,
            probability("qx", qx)?,
            probability("qz", qz)?,
        )),
        (None, None) => Ok(expected_observed_stats(&NoiseScenario::from_pair_error(model, q_ab, n)?)),
        _ => Err(CliError::Usage("--qx and --qz must be given together".into())),
    }
}

/// Optimized finite-key rates of both protocols over a list of round counts.
pub fn finite(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = model(cfg)?;
    let parties = parties(cfg, &[2])?;
    let q_list = match (cfg.qab.is_none(), cfg.noise) {
        (true, Some(nu)) => vec![probability("noise", nu)? / 2.0],
        _ => grid(cfg, "0.05")?,
    };
    let l_list = rounds(cfg, &[1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14])?;
    let eps_value = cfg.eps_tot.unwrap_or(DEFAULT_EPS_TOT);
    let eps_tot = log_eps("eps-tot", eps_value)?;
    let search = search(cfg);
    let mut table = Table::new(&[
        "model",
        "parties",
        "q_ab",
        "q_x",
        "q_z",
        "rounds",
        "r_bb84",
        "r_sixstate",
        "p_bb84",
        "p_sixstate",
        "shares_bb84",
        "shares_sixstate",
    ]);
    for &n in &parties {
        for &q in &q_list {
            let stats = finite_stats(cfg, model, q, n)?;
            let mut warm: [Vec<BudgetShares>; 2] = [Vec::new(), Vec::new()];
            for &l in &l_list {
                let mut cells = Vec::new();
                for (slot, kind) in [ProtocolKind::NBb84, ProtocolKind::NSixState].into_iter().enumerate() {
                    match optimize_rate_warm(kind, n, l, &stats, eps_tot, &search, &warm[slot]) {
                        Ok(o) => {
                            cells.push((Cell::from(o.rate), Cell::from(o.shares.p), Cell::from(format_shares(&o.shares))));
                            warm[slot] = vec![o.shares];
                        }
                        Err(_) => cells.push((Cell::from(0.0), Cell::Empty, Cell::Empty)),
                    }
                }
                let [(rb, pb, sb), (rs, ps, ss)] = <[_; 2]>::try_from(cells).expect("two protocols");
                table.push(vec![
                    model.to_string().into(),
                    n.into(),
                    stats.q_ab.into(),
                    stats.q_x.into(),
                    stats.q_z.into(),
                    l.into(),
                    rb,
                    rs,
                    pb,
                    ps,
                    sb,
                    ss,
                ]);
            }
        }
    }
    Ok(Output {
        command: "finite".into(),
        config: json!({
            "model": model,
            "parties": parties,
            "q_ab": q_list,
            "q_x": cfg.qx,
            "q_z": cfg.qz,
            "rounds": l_list,
            "eps_tot": eps_value,
            "search": search,
        }),
        table,
        passed: None,
    })
}

/// Crossover round counts for each pairwise error rate and party count.
pub fn threshold(cfg: &RunConfig) -> Result<Output, CliError> {
    let parties = parties(cfg, &[2])?;
    let q_list = grid(cfg, "0.05")?;
    let eps_value = cfg.eps_tot.unwrap_or(DEFAULT_EPS_TOT);
    let eps_tot = log_eps("eps-tot", eps_value)?;
    let defaults = ThresholdConfig::default();
    let config = ThresholdConfig {
        l_max: match cfg.l_max {
            Some(v) => as_count("l-max", v)?,
            None => defaults.l_max,
        },
        search: search(cfg),
        ..defaults
    };
    let mut table = Table::new(&[
        "q_ab",
        "parties",
        "l_bar",
        "log2_l_bar",
        "r_bb84",
        "r_sixstate",
        "r_bb84_below",
        "r_sixstate_below",
    ]);
    for &q in &q_list {
        if !(q > 0.0 && q < 0.5) {
            return Err(CliError::Usage(format!("threshold needs q_ab in (0, 1/2), got {q}")));
        }
        for &n in &parties {
            match threshold_l(q, n, eps_tot, &config)? {
                Some(t) => table.push(vec![
                    q.into(),
                    n.into(),
                    t.l_bar.into(),
                    (t.l_bar as f64).log2().into(),
                    t.at.bb84.into(),
                    t.at.six_state.into(),
                    t.below.bb84.into(),
                    t.below.six_state.into(),
                ]),
                None => {
                    let mut row = vec![q.into(), n.into()];
                    row.extend(std::iter::repeat_n(Cell::Empty, 6));
                    table.push(row);
                }
            }
        }
    }
    Ok(Output {
        command: "threshold".into(),
        config: json!({
            "q_ab": q_list,
            "parties": parties,
            "eps_tot": eps_value,
            "l_min": config.l_min,
            "l_max": config.l_max,
            "search": config.search,
        }),
        table,
        passed: None,
    })
}

fn protocol(cfg: &RunConfig) -> Result<ProtocolKind, CliError> {
    match cfg.protocol.as_deref().unwrap_or("bb84") {
        "bb84" | "n-bb84" => Ok(ProtocolKind::NBb84),
        "six-state" | "sixstate" | "n-six-state" => Ok(ProtocolKind::NSixState),
        other => Err(CliError::Usage(format!("unknown protocol '{other}'"))),
    }
}

fn first_party(cfg: &RunConfig, default: u32) -> Result<u32, CliError> {
    Ok(parties(cfg, &[default])?[0])
}

struct SamplingParams {
    total: u64,
    sample: u64,
    weight: u64,
    trials: u64,
    eps: f64,
}

fn sampling_params(cfg: &RunConfig) -> SamplingParams {
    SamplingParams {
        total: cfg.total_bits.unwrap_or(2000),
        sample: cfg.sample_size.unwrap_or(1000),
        weight: cfg.weight.unwrap_or(100),
        trials: cfg.trials.unwrap_or(100_000),
        eps: cfg.eps.unwrap_or(0.01),
    }
}

struct EcParams {
    parties: u32,
    key_bits: u32,
    flip: f64,
    eps_ec: f64,
    radius: u32,
    trials: u64,
}

fn ec_params(cfg: &RunConfig) -> Result<EcParams, CliError> {
    Ok(EcParams {
        parties: first_party(cfg, 3)?,
        key_bits: cfg.key_bits.unwrap_or(12),
        flip: probability("flip-prob", cfg.flip_prob.unwrap_or(0.05))?,
        eps_ec: cfg.eps_ec.unwrap_or(1.0 / 64.0),
        radius: cfg.radius.unwrap_or(3),
        trials: cfg.trials.unwrap_or(100_000),
    })
}

/// Runs one reference engine and tabulates its raw output.
pub fn simulate(op: SimulateOp, cfg: &RunConfig) -> Result<Output, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let (config, table) = match op {
        SimulateOp::Rounds => {
            let model = model(cfg)?;
            let n = first_party(cfg, 3)?;
            let nu = probability("noise", cfg.noise.unwrap_or(0.1))?;
            let l = rounds(cfg, &[1e6])?[0];
            let kind = protocol(cfg)?;
            let p = cfg.test_prob.unwrap_or(0.25);
            let scenario = NoiseScenario::new(model, nu, n)?;
            let report = simulate_rounds(&scenario, &ProtocolConfig::new(kind, n, l, p)?, seed)?;
            let probs = marginal_probabilities(&scenario);
            let mut table = Table::new(&["statistic", "count", "trials", "frequency", "closed_form", "sigma"]);
            let mut row = |name: String, count: u64, trials: u64, expected: f64| {
                table.push(vec![
                    name.into(),
                    count.into(),
                    trials.into(),
                    (count as f64 / trials.max(1) as f64).into(),
                    expected.into(),
                    binomial_sigma(expected, trials.max(1)).into(),
                ]);
            };
            for (i, &c) in report.ab_errors.iter().enumerate() {
                row(format!("q_ab_{}", i + 1), c, report.z_rounds, probs.p_ab);
            }
            row("q_x".into(), report.x_errors, report.x_rounds, probs.p_x);
            row("q_z".into(), report.z_errors, report.z_rounds, probs.p_z);
            let config = json!({"op": op, "model": model, "parties": n, "noise": nu, "rounds": l,
                                "protocol": kind, "test_prob": p, "seed": seed});
            (config, table)
        }
        SimulateOp::Exact => {
            let model = model(cfg)?;
            let n = first_party(cfg, 3)?;
            let nu = probability("noise", cfg.noise.unwrap_or(0.1))?;
            let scenario = NoiseScenario::new(model, nu, n)?;
            let exact = exact_marginals(&scenario)?;
            let closed = marginal_probabilities(&scenario);
            let mut table = Table::new(&["quantity", "exact", "closed_form", "abs_diff"]);
            for (name, e, c) in [
                ("p_ab", exact.p_ab, closed.p_ab),
                ("p_x", exact.p_x, closed.p_x),
                ("p_z", exact.p_z, closed.p_z),
            ] {
                table.push(vec![name.into(), e.into(), c.into(), (e - c).abs().into()]);
            }
            (json!({"op": op, "model": model, "parties": n, "noise": nu}), table)
        }
        SimulateOp::Sampling => {
            let sp = sampling_params(cfg);
            let r = sampling_lemma_experiment(sp.total, sp.sample, sp.weight, sp.trials, log_eps("eps", sp.eps)?, seed)?;
            let mut table = Table::new(&["inequality", "violations", "trials", "frequency", "bound"]);
            let freqs = r.frequencies();
            for (i, name) in ["two_sided", "upper", "lower"].into_iter().enumerate() {
                table.push(vec![
                    name.into(),
                    r.violations[i].into(),
                    r.trials.into(),
                    freqs[i].into(),
                    r.bounds[i].into(),
                ]);
            }
            let config = json!({"op": op, "total_bits": sp.total, "sample_size": sp.sample, "weight": sp.weight,
                                "trials": sp.trials, "eps": sp.eps, "seed": seed});
            (config, table)
        }
        SimulateOp::EcToy => {
            let ep = ec_params(cfg)?;
            let r = ec_toy_run(ep.parties, ep.key_bits, ep.flip, log_eps("eps-ec", ep.eps_ec)?, ep.radius, ep.trials, seed)?;
            let mut table = Table::new(&["quantity", "value"]);
            table.push(vec!["trials".into(), r.trials.into()]);
            table.push(vec!["failures".into(), r.failures.into()]);
            table.push(vec!["aborts".into(), r.aborts.into()]);
            table.push(vec!["failure_freq".into(), r.failure_freq.into()]);
            table.push(vec!["abort_freq".into(), r.abort_freq.into()]);
            table.push(vec!["leakage_bits".into(), r.leakage_bits.into()]);
            table.push(vec!["ball_size".into(), r.ball_size.into()]);
            table.push(vec!["degenerate".into(), r.degenerate.into()]);
            let config = json!({"op": op, "parties": ep.parties, "key_bits": ep.key_bits, "flip_prob": ep.flip,
                                "eps_ec": ep.eps_ec, "radius": ep.radius, "trials": ep.trials, "seed": seed});
            (config, table)
        }
    };
    Ok(Output {
        command: "simulate".into(),
        config,
        table,
        passed: None,
    })
}

struct Checks {
    table: Table,
}

impl Checks {
    fn new() -> Self {
        Self {
            table: Table::new(&["check", "observed", "reference", "tolerance", "pass"]),
        }
    }

    /// Passes when `|observed - reference| <= tolerance`.
    fn close(&mut self, name: String, observed: f64, reference: f64, tolerance: f64) {
        let pass = (observed - reference).abs() <= tolerance;
        self.table
            .push(vec![name.into(), observed.into(), reference.into(), tolerance.into(), pass.into()]);
    }

    /// Passes when `observed <= bound + tolerance`.
    fn below(&mut self, name: String, observed: f64, bound: f64, tolerance: f64) {
        let pass = observed <= bound + tolerance;
        self.table
            .push(vec![name.into(), observed.into(), bound.into(), tolerance.into(), pass.into()]);
    }

    fn all_pass(&self) -> bool {
        self.table
            .column("pass")
            .is_some_and(|c| c.iter().all(|v| **v == Cell::Bool(true)))
    }
}

fn models(cfg: &RunConfig) -> Result<Vec<NoiseModel>, CliError> {
    Ok(match cfg.model {
        Some(_) => vec![model(cfg)?],
        None => vec![NoiseModel::Global, NoiseModel::Local],
    })
}

fn validate_marginals(cfg: &RunConfig, checks: &mut Checks) -> Result<Value, CliError> {
    let models = models(cfg)?;
    let parties = parties(cfg, &[2, 3, 4])?;
    let nus = [0.0, 0.1, 0.5, 1.0];
    for &model in &models {
        for &n in &parties {
            for nu in nus {
                let s = NoiseScenario::new(model, nu, n)?;
                let (e, c) = (exact_marginals(&s)?, marginal_probabilities(&s));
                for (q, a, b) in [("p_ab", e.p_ab, c.p_ab), ("p_x", e.p_x, c.p_x), ("p_z", e.p_z, c.p_z)] {
                    checks.close(format!("marginals/{model}/N={n}/nu={nu}/{q}"), a, b, EXACT_TOL);
                }
            }
        }
    }
    Ok(json!({"models": models, "parties": parties, "noise": nus, "tolerance": EXACT_TOL}))
}

fn validate_monte_carlo(cfg: &RunConfig, seed: u64, checks: &mut Checks) -> Result<Value, CliError> {
    let models = models(cfg)?;
    let parties = parties(cfg, &[3])?;
    let nu = probability("noise", cfg.noise.unwrap_or(0.1))?;
    let count = as_count("mc-rounds", cfg.mc_rounds.unwrap_or(1e6))?;
    for &model in &models {
        for &n in &parties {
            let s = NoiseScenario::new(model, nu, n)?;
            let probs = marginal_probabilities(&s);
            let r = simulate_statistics(&s, count, count, seed);
            let band = |p: f64| MC_SIGMAS * binomial_sigma(p, count);
            for (i, q) in r.q_ab().into_iter().enumerate() {
                checks.close(format!("monte-carlo/{model}/N={n}/q_ab_{}", i + 1), q, probs.p_ab, band(probs.p_ab));
            }
            checks.close(format!("monte-carlo/{model}/N={n}/q_x"), r.q_x(), probs.p_x, band(probs.p_x));
            checks.close(format!("monte-carlo/{model}/N={n}/q_z"), r.q_z(), probs.p_z, band(probs.p_z));
        }
    }
    Ok(json!({"models": models, "parties": parties, "noise": nu, "rounds": count, "sigmas": MC_SIGMAS}))
}

fn validate_sampling(cfg: &RunConfig, seed: u64, checks: &mut Checks) -> Result<Value, CliError> {
    let sp = sampling_params(cfg);
    let r = sampling_lemma_experiment(sp.total, sp.sample, sp.weight, sp.trials, log_eps("eps", sp.eps)?, seed)?;
    let freqs = r.frequencies();
    for (i, name) in ["two_sided", "upper", "lower"].into_iter().enumerate() {
        let tol = BOUND_SIGMAS * binomial_sigma(r.bounds[i].min(1.0), r.trials);
        checks.below(format!("sampling/{name}"), freqs[i], r.bounds[i], tol);
    }
    Ok(json!({"total_bits": sp.total, "sample_size": sp.sample, "weight": sp.weight, "trials": sp.trials,
              "eps": sp.eps, "sigmas": BOUND_SIGMAS}))
}

fn validate_ec(cfg: &RunConfig, seed: u64, checks: &mut Checks) -> Result<Value, CliError> {
    let ep = ec_params(cfg)?;
    let r = ec_toy_run(ep.parties, ep.key_bits, ep.flip, log_eps("eps-ec", ep.eps_ec)?, ep.radius, ep.trials, seed)?;
    let tol = BOUND_SIGMAS * binomial_sigma(ep.eps_ec, r.trials);
    checks.below("ec-toy/failure".into(), r.failure_freq, ep.eps_ec, tol);
    Ok(json!({"parties": ep.parties, "key_bits": ep.key_bits, "flip_prob": ep.flip, "eps_ec": ep.eps_ec,
              "radius": ep.radius, "trials": ep.trials, "leakage_bits": r.leakage_bits, "degenerate": r.degenerate,
              "sigmas": BOUND_SIGMAS}))
}

/// Runs reference checks and reports pass/fail per check.
pub fn validate(op: ValidateOp, cfg: &RunConfig) -> Result<Output, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let mut checks = Checks::new();
    let mut config = serde_json::Map::new();
    config.insert("op".into(), json!(op));
    config.insert("seed".into(), json!(seed));
    let all = op == ValidateOp::All;
    if all || op == ValidateOp::Marginals {
        config.insert("marginals".into(), validate_marginals(cfg, &mut checks)?);
    }
    if all || op == ValidateOp::MonteCarlo {
        config.insert("monte_carlo".into(), validate_monte_carlo(cfg, seed, &mut checks)?);
    }
    if all || op == ValidateOp::Sampling {
        config.insert("sampling".into(), validate_sampling(cfg, seed, &mut checks)?);
    }
    if all || op == ValidateOp::EcToy {
        config.insert("ec_toy".into(), validate_ec(cfg, seed, &mut checks)?);
    }
    let passed = checks.all_pass();
    Ok(Output {
        command: "validate".into(),
        config: Value::Object(config),
        table: checks.table,
        passed: Some(passed),
    })
}
