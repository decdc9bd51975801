use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use virodyn::bifurcation::{linspace, sweep_branches};
use virodyn::dynamics::{find_limit_cycle, integrate, CycleOptions, Sampling, Tolerances};
use virodyn::equilibria::equilibria;
use virodyn::stability::classify;
use virodyn::{jacobian, Param, State};
use virodyn_bench::{linear_immune, quadratic_immune};

fn kernels(c: &mut Criterion) {
    let p = quadratic_immune(42.0);
    let s = State::new(0.145, 0.284, 0.0131, 0.284);
    c.bench_function("jacobian", |b| b.iter(|| jacobian(black_box(&p), black_box(&s))));

    c.bench_function("equilibria_quadratic", |b| b.iter(|| equilibria(black_box(&p)).unwrap()));

    let set = equilibria(&p).unwrap();
    c.bench_function("classify_all", |b| {
        b.iter(|| set.feasible().map(|e| classify(&p, e).unwrap().is_stable()).count())
    });

    let lin = linear_immune(23.0);
    let start = State::new(0.25, 0.05, 1.0, 0.5);
    c.bench_function("integrate_500", |b| {
        b.iter(|| integrate(&lin, start, (0.0, 500.0), Tolerances::default(), Sampling::Steps).unwrap())
    });

    let orbit = integrate(&lin, start, (0.0, 3000.0), Tolerances::default(), Sampling::Steps).unwrap();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("limit_cycle_b23", |b| b.iter(|| find_limit_cycle(&lin, &orbit, &CycleOptions::default()).unwrap()));
    let grid = linspace(1.5, 25.0, 200);
    g.bench_function("sweep_linear_200", |b| b.iter(|| sweep_branches(&lin, Param::B, &grid).unwrap()));
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
