use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wiles_defect::fuzz::{run_fuzz, FuzzConfig};
use wiles_defect::par::Execution;

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("fuzz_sweep");
    group.sample_size(10);
    for trials in [50usize, 200] {
        for (label, execution) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            let cfg = FuzzConfig {
                trials,
                execution,
                ..FuzzConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(label, trials), &cfg, |b, cfg| {
                b.iter(|| run_fuzz(cfg))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
