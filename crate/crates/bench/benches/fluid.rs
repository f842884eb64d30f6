use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairsched::corpus::{illustrative, random_scenario, RandomScenarioParams};
use fairsched::fluid::brute_force_mmf;
use fairsched::{solve, ObjectiveSpec, RngStream, Weights};
use std::hint::black_box;

fn solver(c: &mut Criterion) {
    let s = illustrative();
    let mut group = c.benchmark_group("solve_illustrative");
    for a in [0.5, 1.0, 2.0] {
        let obj = ObjectiveSpec::proportional(a);
        group.bench_with_input(BenchmarkId::new("pf", a), &obj, |b, obj| {
            b.iter(|| solve(black_box(&s), obj).unwrap())
        });
    }
    let mmf = ObjectiveSpec::max_min(Weights::drf(&s));
    group.bench_function("mmf_drf", |b| b.iter(|| solve(black_box(&s), &mmf).unwrap()));
    group.finish();

    let params = RandomScenarioParams {
        frameworks: (10, 10),
        servers: (10, 10),
        resources: (8, 8),
        ..Default::default()
    };
    let big = random_scenario(&mut RngStream::new(3), &params);
    let obj = ObjectiveSpec::proportional(1.0);
    let mut group = c.benchmark_group("solve_10x10x8");
    group.sample_size(10);
    group.bench_function("pf", |b| b.iter(|| solve(black_box(&big), &obj).unwrap()));
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let s = fairsched::corpus::scaled_illustrative([16.0, 6.0]);
    let w = Weights::psdsf_global(&s);
    c.bench_function("brute_force_16_6", |b| {
        b.iter(|| brute_force_mmf(black_box(&s), &w).unwrap())
    });
}

criterion_group!(benches, solver, enumeration);
criterion_main!(benches);
