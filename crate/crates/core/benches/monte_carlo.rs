use criterion::{criterion_group, criterion_main, Criterion};
use imtrack::parallel::Execution;
use imtrack::scenario::run_scenario;
use imtrack::scenarios::builtin;

fn schedules(c: &mut Criterion) {
    let mut cfg = builtin("turn-plus").expect("built-in scenario");
    cfg.runs = 16;
    let mut group = c.benchmark_group("turn-plus, 16 runs");
    group.sample_size(10);
    for (label, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        group.bench_function(label, |b| b.iter(|| run_scenario(&cfg, exec).expect("scenario runs")));
    }
    group.finish();
}

criterion_group!(benches, schedules);
criterion_main!(benches);
