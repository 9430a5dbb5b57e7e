//! Synthetic markets: topology, covariates and customer values.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{CustomerShock, EdgeKey, FeatureMatrix, FeatureTable, GenConfig, Topology, TradingGraph};
use crate::rng::{stream, Stream};
use crate::{Error, Execution, Result};

fn normals<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Directed edges of every layer. Layer `l` draws from its own stream, so
/// layers can be generated concurrently.
pub fn generate_edges(config: &GenConfig, exec: Execution) -> Vec<EdgeKey> {
    let dims = config.dims;
    let per_layer = exec.map(dims.layers(), |layer| {
        let (asset, day) = dims.layer_key(layer);
        let mut rng = stream(config.seed, Stream::Layer(layer));
        let mut edges = Vec::new();
        for seller in 0..dims.dealers {
            for buyer in 0..dims.dealers {
                if seller == buyer {
                    continue;
                }
                let p = config.topology.link_probability(seller, buyer);
                // Always consume one draw per pair so that edge sets for
                // different probabilities share the same uniforms.
                if rng.random::<f64>() < p {
                    edges.push(EdgeKey {
                        seller,
                        buyer,
                        asset,
                        day,
                    });
                }
            }
        }
        edges
    });
    per_layer.into_iter().flatten().collect()
}

/// Draws X, Y, E (i.i.d. standard normal per coordinate) and customer values
/// `u = exp(mu_u + z)` for the given edge list. `edges` must be in canonical
/// (layer, seller, buyer) order for E rows to line up with the graph.
pub fn generate_features(config: &GenConfig, edges: &[EdgeKey]) -> FeatureTable {
    let dims = config.dims;
    let f = config.features;
    let mut rng = stream(config.seed, Stream::NodeFeatures);

    let x = FeatureMatrix::from_rows(f.d_x, normals(&mut rng, f.d_x * dims.layers()))
        .expect("row-aligned by construction");
    let y = FeatureMatrix::from_rows(f.d_y, normals(&mut rng, f.d_y * dims.dealers * dims.days))
        .expect("row-aligned by construction");
    let noise = &config.noise;
    let u = (0..dims.nodes())
        .map(|_| {
            let z = match noise.u_shock {
                CustomerShock::Normal => noise.sigma_u * rng.sample::<f64, _>(StandardNormal),
                CustomerShock::Uniform => noise.sigma_u * rng.random::<f64>(),
            };
            (config.mu_u + z).exp()
        })
        .collect();

    // Relationship features: one stream per layer, rows in edge order.
    let mut e = FeatureMatrix::new(f.d_e);
    let mut current: Option<(usize, crate::rng::Rng)> = None;
    for edge in edges {
        let layer = dims.layer_index(edge.asset, edge.day);
        if current.as_ref().map(|(l, _)| *l) != Some(layer) {
            current = Some((layer, stream(config.seed, Stream::EdgeFeatures(layer))));
        }
        let (_, rng) = current.as_mut().expect("set above");
        e.push_row(&normals(rng, f.d_e));
    }

    FeatureTable { x, y, e, u, z: None }
}

/// Erdős–Rényi market: each ordered pair of distinct dealers in each layer
/// is linked with probability `p_edge`.
pub fn generate_er_graph(config: &GenConfig, exec: Execution) -> Result<TradingGraph> {
    if !matches!(config.topology, Topology::ErdosRenyi { .. }) {
        return Err(Error::Config("generate_er_graph needs an `er` topology".into()));
    }
    generate_graph(config, exec)
}

/// Core-periphery market with pair probabilities depending on core membership.
pub fn generate_core_periphery_graph(config: &GenConfig, exec: Execution) -> Result<TradingGraph> {
    if !matches!(config.topology, Topology::CorePeriphery { .. }) {
        return Err(Error::Config(
            "generate_core_periphery_graph needs a `core-periphery` topology".into(),
        ));
    }
    generate_graph(config, exec)
}

/// Generates the graph for whatever topology `config` names.
pub fn generate_graph(config: &GenConfig, exec: Execution) -> Result<TradingGraph> {
    config.validate()?;
    let edges = generate_edges(config, exec);
    let features = generate_features(config, &edges);
    TradingGraph::new(config.dims, edges, features)
}
