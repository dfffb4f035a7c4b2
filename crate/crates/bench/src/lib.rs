//! Shared inputs for the benchmarks.

use nqkd_core::optimize::global_model_stats;
use nqkd_core::{LogEps, ObservedStats, ProtocolConfig, ProtocolKind, SecurityBudget};

pub fn budget() -> SecurityBudget {
    SecurityBudget::uniform(LogEps::from_neg_log2(60.0).expect("valid exponent"))
}

pub fn config(kind: ProtocolKind, parties: u32, total_rounds: u64) -> ProtocolConfig {
    ProtocolConfig::new(kind, parties, total_rounds, 0.01).expect("valid configuration")
}

pub fn stats(q_ab: f64, parties: u32) -> ObservedStats {
    global_model_stats(q_ab, parties).expect("valid error rate")
}
