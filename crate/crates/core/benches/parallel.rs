//! Sequential versus rayon execution on the data-parallel hot spots.
//! Without the `parallel` feature both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tradenet::baselines::CentralityTable;
use tradenet::equilibrium::{generate_latents, solve, SolveSettings};
use tradenet::estimator::TrainConfig;
use tradenet::experiment::simulate_market;
use tradenet::inference::{bootstrap, BootstrapConfig};
use tradenet::market::{generate_graph, Dims, GenConfig};
use tradenet::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn large_market() -> GenConfig {
    let mut cfg = GenConfig::dense(1);
    cfg.dims = Dims::new(40, 4, 10);
    cfg
}

fn bench_solve(c: &mut Criterion) {
    let cfg = large_market();
    let graph = generate_graph(&cfg, Execution::Sequential).unwrap();
    let state = generate_latents(&graph, &cfg).unwrap();
    let mut group = c.benchmark_group("solve_40x4x10");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| solve(&graph, &state, &SolveSettings::default(), None, black_box(exec)).unwrap())
        });
    }
    group.finish();
}

fn bench_centrality(c: &mut Criterion) {
    let graph = generate_graph(&large_market(), Execution::Sequential).unwrap();
    let mut group = c.benchmark_group("centrality_40x4x10");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| CentralityTable::compute(&graph, black_box(exec)).unwrap())
        });
    }
    group.finish();
}

fn bench_bootstrap(c: &mut Criterion) {
    let market = simulate_market(&GenConfig::dense(1), 10, Execution::Sequential).unwrap();
    let train = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let cfg = BootstrapConfig {
        replicates: 16,
        seed: 1,
        ..BootstrapConfig::default()
    };
    let mut group = c.benchmark_group("bootstrap_dense_b16");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| bootstrap(&market.graph, &market.observed, &train, &cfg, None, black_box(exec)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_solve, bench_centrality, bench_bootstrap);
criterion_main!(benches);
