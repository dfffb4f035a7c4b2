use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nqkd_bench::stats;
use nqkd_core::optimize::{optimize_rate, SearchConfig};
use nqkd_core::{LogEps, ProtocolKind};

fn optimizer(c: &mut Criterion) {
    let eps = LogEps::from_eps(5e-9).unwrap();
    let s = stats(0.05, 2);
    let search = SearchConfig {
        max_evaluations: 1000,
        starts: 2,
        seed: 0,
    };
    let mut group = c.benchmark_group("optimize_rate");
    group.sample_size(10);
    for kind in [ProtocolKind::NBb84, ProtocolKind::NSixState] {
        group.bench_function(format!("{kind}/L=1e9"), |bench| {
            bench.iter(|| optimize_rate(kind, 2, black_box(1_000_000_000), &s, eps, &search))
        });
    }
    group.finish();
}

criterion_group!(benches, optimizer);
criterion_main!(benches);
