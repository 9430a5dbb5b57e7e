use super::ModelParams;
use crate::equilibrium::{latents_from_params, solve, SolveSettings};
use crate::market::TradingGraph;
use crate::{Execution, Result};

/// Latent quantities implied by fitted coefficients at a converged
/// equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedLatents {
    pub c: Vec<f64>,
    pub pi: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub best_price: Vec<Option<f64>>,
}

pub fn predict_latents(graph: &TradingGraph, params: &ModelParams, exec: Execution) -> Result<PredictedLatents> {
    params.check_dims(graph.features().dims())?;
    let state = latents_from_params(graph, params)?;
    let sol = solve(graph, &state, &SolveSettings::default(), None, exec)?;
    Ok(PredictedLatents {
        c: state.c,
        pi: state.pi,
        v: sol.v,
        p: sol.p,
        best_price: sol.best_price,
    })
}
