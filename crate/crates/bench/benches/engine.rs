use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use bubblelab_bench::{bench_config, mixed_population};
use bubblelab_core::analytics::{burn_in_cutoff, gross_returns, ReturnSeries};
use bubblelab_core::{multi_agent_clearing_price, run, Engine};

fn clearing_price(c: &mut Criterion) {
    let agents = mixed_population(500);
    c.bench_function("clearing_price_500_agents", |b| {
        b.iter(|| multi_agent_clearing_price(black_box(&agents).iter()).unwrap())
    });
}

fn engine_step(c: &mut Criterion) {
    c.bench_function("step_n500_m10", |b| {
        let mut engine = Engine::new(bench_config(500, 10, 1_000_000)).unwrap();
        b.iter(|| black_box(engine.step()));
    });
    c.bench_function("step_n500_m60", |b| {
        let mut engine = Engine::new(bench_config(500, 60, 1_000_000)).unwrap();
        b.iter(|| black_box(engine.step()));
    });
}

fn two_agent_run(c: &mut Criterion) {
    let config = bench_config(2, 2, 500);
    c.bench_function("run_two_agents_500_periods", |b| {
        b.iter(|| run(black_box(&config)).unwrap())
    });
}

fn return_statistics(c: &mut Criterion) {
    let trace = run(&bench_config(500, 10, 2000)).unwrap();
    let series = gross_returns(&trace).unwrap();
    c.bench_function("burn_in_cutoff_2000", |b| {
        b.iter(|| burn_in_cutoff(black_box(&series)))
    });
    let returns: Vec<f64> = series.returns().to_vec();
    c.bench_function("return_series_validation_2000", |b| {
        b.iter(|| ReturnSeries::new(black_box(returns.clone()), 100).unwrap())
    });
}

criterion_group!(
    benches,
    clearing_price,
    engine_step,
    two_agent_run,
    return_statistics
);
criterion_main!(benches);
