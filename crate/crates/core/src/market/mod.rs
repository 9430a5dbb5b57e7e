//! Layered trading-network model, synthetic generators and persistence.

mod config;
mod generate;
mod graph;
pub mod io;

pub use config::{CustomerShock, FeatureDims, GenConfig, NoiseConfig, Topology};
pub use generate::{
    generate_core_periphery_graph, generate_edges, generate_er_graph, generate_features,
    generate_graph,
};
pub use graph::{Dims, EdgeKey, FeatureMatrix, FeatureTable, NodeKey, TradingGraph};
pub use io::{load_graph, load_graph_with_truth, save_graph, save_graph_with_truth, GraphTruth};
