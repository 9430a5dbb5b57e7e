//! Random small markets shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use tradenet::equilibrium::{generate_latents, LatentState};
use tradenet::estimator::ModelParams;
use tradenet::market::{generate_graph, Dims, GenConfig, Topology, TradingGraph};
use tradenet::rng::{stream, Stream};
use tradenet::Execution;

/// ER market with random size, density and true coefficients in [0.5, 1.5).
/// `layers` bounds (assets, days).
pub fn random_config(seed: u64, max_dealers: usize, layers: (usize, usize)) -> GenConfig {
    let mut rng = stream(seed, Stream::Custom(0xACCE));
    let mut cfg = GenConfig::dense(seed);
    cfg.dims = Dims::new(
        rng.random_range(2..=max_dealers),
        rng.random_range(1..=layers.0),
        rng.random_range(1..=layers.1),
    );
    cfg.topology = Topology::ErdosRenyi {
        p_edge: rng.random_range(0.1..=1.0),
    };
    cfg.true_params = ModelParams::new(
        vec![rng.random_range(0.5..1.5)],
        vec![rng.random_range(0.5..1.5)],
        vec![rng.random_range(0.5..1.5)],
    );
    cfg
}

pub fn random_instance(seed: u64, max_dealers: usize, layers: (usize, usize)) -> (TradingGraph, LatentState) {
    let cfg = random_config(seed, max_dealers, layers);
    let graph = generate_graph(&cfg, Execution::Sequential).expect("graph");
    let latents = generate_latents(&graph, &cfg).expect("latents");
    (graph, latents)
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Uniform values spanning the margins `u - c` with 50 units of slack.
pub fn random_values<R: Rng>(state: &LatentState, rng: &mut R) -> Vec<f64> {
    let margin: Vec<f64> = state.u.iter().zip(&state.c).map(|(u, c)| u - c).collect();
    let lo = margin.iter().copied().fold(f64::INFINITY, f64::min) - 50.0;
    let hi = margin.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 50.0;
    (0..margin.len()).map(|_| rng.random_range(lo..hi)).collect()
}
