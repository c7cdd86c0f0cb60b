use std::hint::black_box;

use botimpact::opinion::Sweep;
use botimpact::synth::{generate_opinion_network, OpinionNetworkConfig};
use botimpact::{ghic, solve_equilibrium, SolverConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("equilibrium");
    group.sample_size(10);
    for n in [1_000usize, 10_000] {
        let state = generate_opinion_network(&OpinionNetworkConfig {
            n,
            mean_friends: 8.0,
            seed: 2,
            ..OpinionNetworkConfig::default()
        })
        .unwrap();
        for (name, sweep) in [
            ("gauss-seidel", Sweep::GaussSeidel),
            ("jacobi", Sweep::Jacobi { damping: 0.8 }),
        ] {
            let cfg = SolverConfig {
                sweep,
                ..SolverConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(name, n), &state, |b, s| {
                b.iter(|| solve_equilibrium(black_box(s), &cfg).unwrap().iterations)
            });
        }
        let targets: Vec<usize> = (0..n / 20).collect();
        group.bench_with_input(BenchmarkId::new("ghic", n), &state, |b, s| {
            b.iter(|| ghic(black_box(s), &targets, &SolverConfig::default(), Default::default()).unwrap().delta)
        });
    }
    group.finish();
}

criterion_group!(benches, bench_solvers);
criterion_main!(benches);
