use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nqkd_bench::{budget, config, stats};
use nqkd_core::finite_key::{gamma_pe_infimum, key_length};
use nqkd_core::simulate::exact_marginals;
use nqkd_core::{NoiseModel, NoiseScenario, ProtocolKind};

fn key_lengths(c: &mut Criterion) {
    let b = budget();
    let mut group = c.benchmark_group("key_length");
    for parties in [2u32, 5] {
        let s = stats(0.05, parties);
        let bb84 = config(ProtocolKind::NBb84, parties, 1_000_000_000);
        let six = config(ProtocolKind::NSixState, parties, 1_000_000_000);
        group.bench_function(format!("bb84/N={parties}"), |bench| {
            bench.iter(|| key_length(black_box(&bb84), black_box(&s), black_box(&b)))
        });
        group.bench_function(format!("six_state/N={parties}"), |bench| {
            bench.iter(|| key_length(black_box(&six), black_box(&s), black_box(&b)))
        });
    }
    group.finish();
}

fn gamma_infimum(c: &mut Criterion) {
    let b = budget();
    let s = stats(0.05, 3);
    let counts = config(ProtocolKind::NSixState, 3, 1_000_000).counts().unwrap();
    c.bench_function("gamma_pe_infimum", |bench| {
        bench.iter(|| gamma_pe_infimum(black_box(&s), &b, 3, &counts))
    });
}

fn exact_state(c: &mut Criterion) {
    let scenario = NoiseScenario::new(NoiseModel::Local, 0.1, 5).unwrap();
    c.bench_function("exact_marginals/local/N=5", |bench| bench.iter(|| exact_marginals(black_box(&scenario))));
}

criterion_group!(benches, key_lengths, gamma_infimum, exact_state);
criterion_main!(benches);
