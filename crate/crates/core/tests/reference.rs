//! Evaluators against frozen arbitrary-precision values from
//! `tests/oracle/gen_reference.py`.

use std::collections::HashMap;

use nqkd_core::finite_key::{epsilon_total, key_length};
use nqkd_core::numerics::{binary_entropy, eps_sum, eta_correction, xi_correction};
use nqkd_core::{asymptotic, finite_key, LogEps, ObservedStats, ProtocolConfig, ProtocolKind, SecurityBudget};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    parties: u32,
    total_rounds: u64,
    p: f64,
    m: u64,
    n: u64,
    q_ab: Vec<f64>,
    q_x: f64,
    q_z: f64,
    neg_log2: HashMap<String, f64>,
    raw_length: f64,
    eps_tot_neg_log2: f64,
    gamma_core: Option<f64>,
}

#[derive(Deserialize)]
struct Reference {
    scalars: HashMap<String, f64>,
    bb84: Vec<Case>,
    six_state: Vec<Case>,
}

fn reference() -> Reference {
    let text = include_str!("fixtures/reference.json");
    serde_json::from_str(text).expect("reference fixture parses")
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn le(neg: f64) -> LogEps {
    LogEps::from_neg_log2(neg).unwrap()
}

impl Case {
    fn eps(&self, name: &str) -> LogEps {
        le(self.neg_log2[name])
    }

    fn budget(&self, kind: ProtocolKind) -> SecurityBudget {
        match kind {
            ProtocolKind::NBb84 => {
                SecurityBudget::nbb84(self.eps("eps_z"), self.eps("eps_x"), self.eps("eps_ec"), self.eps("eps_pa"))
            }
            ProtocolKind::NSixState => SecurityBudget::six_state(
                self.eps("eps_bar"),
                self.eps("eps_z"),
                self.eps("eps_x"),
                self.eps("eps_z_prime"),
                self.eps("eps_ec"),
                self.eps("eps_pa"),
            ),
        }
    }

    fn check(&self, kind: ProtocolKind) -> (f64, f64) {
        let config = ProtocolConfig::new(kind, self.parties, self.total_rounds, self.p).unwrap();
        let counts = config.counts().unwrap();
        assert_eq!((counts.m, counts.n), (self.m, self.n));
        let stats = ObservedStats::per_bob(self.q_ab.clone(), self.q_x, self.q_z);
        let budget = self.budget(kind);
        let r = key_length(&config, &stats, &budget).unwrap();
        let total = epsilon_total(&budget, &config).unwrap();
        (rel_err(r.raw_length, self.raw_length), rel_err(total.neg_log2, self.eps_tot_neg_log2))
    }
}

#[test]
fn scalar_anchors() {
    let s = reference().scalars;
    let close = |got: f64, key: &str| assert!(rel_err(got, s[key]) < 1e-12, "{key}: {got} vs {}", s[key]);
    close(binary_entropy(0.11).unwrap(), "h_0_11");
    let e9 = LogEps::from_eps(1e-9).unwrap();
    close(xi_correction(e9, 100_000, 100_000).unwrap(), "xi_1e9_1e5_1e5");
    close(eta_correction(e9, 2, 100_000).unwrap(), "eta_1e9_2_1e5");
    close(
        eps_sum(&[(3.0, le(1000.0)), (1.0, le(1002.0))]).unwrap().neg_log2(),
        "eps_sum_3x2m1000_plus_2m1002",
    );
    let uniform = SecurityBudget::uniform(le(60.0));
    close(finite_key::epsilon_total_nbb84(&uniform, 3).unwrap().neg_log2, "eps_tot_bb84_n3_all_2m60");
    close(
        finite_key::epsilon_total_nsixstate(&uniform, 2, 1_000_000).unwrap().neg_log2,
        "eps_tot_six_n2_l1e6_all_2m60",
    );
    close(
        finite_key::six_state_entropy_expression(0.05, 0.05, 0.05).unwrap(),
        "six_expression_005_005_005",
    );
    assert!((asymptotic::find_rate_root(|p| 1.0 - 2.0 * binary_entropy(p).unwrap(), 0.0, 0.5).unwrap() - s["bb84_root"]).abs() < 1e-8);
}

#[test]
fn bb84_key_length_matches_reference() {
    let cases = reference().bb84;
    assert_eq!(cases.len(), 100);
    let worst = cases.iter().map(|c| c.check(ProtocolKind::NBb84)).fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    assert!(worst.0 < 1e-9 && worst.1 < 1e-9, "worst relative errors {worst:?}");
}

#[test]
fn six_state_key_length_matches_reference() {
    let cases = reference().six_state;
    assert_eq!(cases.len(), 100);
    let mut worst = (0.0f64, 0.0f64);
    for c in &cases {
        let e = c.check(ProtocolKind::NSixState);
        worst = (worst.0.max(e.0), worst.1.max(e.1));
        let config = ProtocolConfig::new(ProtocolKind::NSixState, c.parties, c.total_rounds, c.p).unwrap();
        let stats = ObservedStats::per_bob(c.q_ab.clone(), c.q_x, c.q_z);
        let inf = finite_key::gamma_pe_infimum(&stats, &c.budget(ProtocolKind::NSixState), c.parties, &config.counts().unwrap())
            .unwrap()
            .unwrap();
        assert!(rel_err(inf.core_value, c.gamma_core.unwrap()) < 1e-9);
    }
    assert!(worst.0 < 1e-9 && worst.1 < 1e-9, "worst relative errors {worst:?}");
}
