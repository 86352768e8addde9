use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use odeprog::bounds::{verify_batch, ReachScenario, Scenario, TanhScenario};
use odeprog::par::Exec;
use odeprog::sim::InputSignal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reach_batch(n: usize) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..n)
        .map(|_| {
            let eta = rng.gen_range(0.01..0.3);
            let g_inf = rng.gen_range(-2.0..2.0);
            let g = InputSignal::sine(eta, rng.gen_range(0.5..3.0), 0.0).shifted(g_inf);
            let phi = InputSignal::steps(&[(0.0, rng.gen_range(0.5..2.0)), (1.0, rng.gen_range(0.5..3.0))]);
            let e = InputSignal::held_noise(rng.gen(), 0.05, 0.25);
            Scenario::Reach(ReachScenario::new(eta, rng.gen_range(-3.0..3.0), g_inf, g, phi, e, 4.0))
        })
        .collect()
}

fn tanh_batch(n: usize) -> Vec<Scenario> {
    (0..n).map(|_| Scenario::Tanh(TanhScenario::default())).collect()
}

fn bench_batches(c: &mut Criterion) {
    let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut group = c.benchmark_group("verify_batch");
    group.sample_size(10);
    for (name, batch) in [("reach", reach_batch(32)), ("tanh", tanh_batch(16))] {
        group.bench_with_input(BenchmarkId::new(format!("{name}/sequential"), batch.len()), &batch, |b, s| {
            b.iter(|| verify_batch(Exec::Sequential, s))
        });
        group.bench_with_input(BenchmarkId::new(format!("{name}/parallel"), batch.len()), &batch, |b, s| {
            b.iter(|| verify_batch(Exec::Parallel { jobs }, s))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batches);
criterion_main!(benches);
