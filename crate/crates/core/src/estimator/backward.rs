//! Weighted MSE loss and its reverse-mode gradient through the unrolled
//! message-passing sweeps.
//!
//! Each `max` is treated as linear along the branch recorded in the forward
//! trace, so the gradient is exact wherever no argmax is tied and a
//! consistent subgradient at ties.

use super::forward::{Branch, ForwardTrace};
use super::ModelParams;
use crate::equilibrium::ObservedTrade;
use crate::market::TradingGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub mse: f64,
    pub regularization: f64,
}

impl LossValue {
    pub fn total(&self) -> f64 {
        self.mse + self.regularization
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_beta_x: Vec<f64>,
    pub d_beta_y: Vec<f64>,
    pub d_eta: Vec<f64>,
}

impl Gradients {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.d_beta_x.clone();
        out.extend_from_slice(&self.d_beta_y);
        out.extend_from_slice(&self.d_eta);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|g| g.is_finite())
    }
}

fn check_weights(observed: &[ObservedTrade], weights: Option<&[f64]>) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::InvalidInput("loss needs at least one observed price".into()));
    }
    match weights {
        None => Ok(observed.len() as f64),
        Some(w) => {
            if w.len() != observed.len() {
                return Err(Error::Dimension {
                    what: "observation weights".into(),
                    expected: observed.len(),
                    got: w.len(),
                });
            }
            if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidInput("observation weights must be nonnegative".into()));
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidInput("observation weights sum to zero".into()));
            }
            Ok(total)
        }
    }
}

fn predicted(trace: &ForwardTrace, obs: &ObservedTrade) -> Result<f64> {
    trace
        .pred_best
        .get(obs.node)
        .copied()
        .flatten()
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "observed seller {:?} has no outgoing edges",
                obs.edge.seller_key()
            ))
        })
}

/// Weighted mean squared error over observed sellers plus
/// `lambda * |params|^2`. Weights are multiplicities (all ones if `None`).
pub fn loss(
    trace: &ForwardTrace,
    observed: &[ObservedTrade],
    weights: Option<&[f64]>,
    params: &ModelParams,
    lambda: f64,
) -> Result<LossValue> {
    let total_weight = check_weights(observed, weights)?;
    let mut sse = 0.0;
    for (k, obs) in observed.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[k]);
        let r = predicted(trace, obs)? - obs.price;
        sse += w * r * r;
    }
    Ok(LossValue {
        mse: sse / total_weight,
        regularization: lambda * params.squared_norm(),
    })
}

/// Gradient of [`loss`] with respect to the parameters.
pub fn backward(
    graph: &TradingGraph,
    trace: &ForwardTrace,
    observed: &[ObservedTrade],
    weights: Option<&[f64]>,
    params: &ModelParams,
    lambda: f64,
) -> Result<Gradients> {
    let total_weight = check_weights(observed, weights)?;
    let n = graph.num_nodes();
    let m = graph.num_edges();

    // Adjoint of the sweep-L prices, seeded by the loss.
    let mut g_p = vec![0.0; m];
    for (k, obs) in observed.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[k]);
        let r = predicted(trace, obs)? - obs.price;
        let e = trace.best_edge[obs.node].expect("checked by predicted()");
        g_p[e] += 2.0 * w * r / total_weight;
    }

    let mut g_v = vec![0.0; n];
    let mut g_c = vec![0.0; n];
    let mut g_pi = vec![0.0; m];
    for l in (1..=trace.layers).rev() {
        // v^l = -c + (u or p^l along the recorded branch)
        for (i, branch) in trace.argmax_choices[l - 1].iter().enumerate() {
            let g = g_v[i];
            if g == 0.0 {
                continue;
            }
            g_c[i] -= g;
            if let Branch::Edge(e) = *branch {
                g_p[e] += g;
            }
        }
        // p^l_e = pi_e v^{l-1}_seller + (1 - pi_e) v^{l-1}_buyer
        let v = &trace.v_layers[l - 1];
        g_v.iter_mut().for_each(|g| *g = 0.0);
        for e in 0..m {
            let g = g_p[e];
            if g == 0.0 {
                continue;
            }
            let s = graph.edge_seller(e);
            let b = graph.edge_buyer(e);
            let pi = trace.pi[e];
            g_pi[e] += g * (v[s] - v[b]);
            g_v[s] += g * pi;
            g_v[b] += g * (1.0 - pi);
            g_p[e] = 0.0;
        }
    }
    // v^0 = u - c
    for i in 0..n {
        g_c[i] -= g_v[i];
    }

    let (dx, dy, de) = params.dims();
    let mut d_beta_x = vec![0.0; dx];
    let mut d_beta_y = vec![0.0; dy];
    let mut d_eta = vec![0.0; de];
    for (i, (g, c)) in g_c.iter().zip(&trace.c).enumerate() {
        // c = exp(a)  =>  dc/da = c
        let g_a = g * c;
        if g_a == 0.0 {
            continue;
        }
        for (d, x) in d_beta_x.iter_mut().zip(graph.x(i)) {
            *d += g_a * x;
        }
        for (d, y) in d_beta_y.iter_mut().zip(graph.y(i)) {
            *d += g_a * y;
        }
    }
    for (e, (g, &pi)) in g_pi.iter().zip(&trace.pi).enumerate() {
        let g_b = g * pi * (1.0 - pi);
        if g_b == 0.0 {
            continue;
        }
        for (d, x) in d_eta.iter_mut().zip(graph.e(e)) {
            *d += g_b * x;
        }
    }
    for (d, p) in d_beta_x.iter_mut().zip(&params.beta_x) {
        *d += 2.0 * lambda * p;
    }
    for (d, p) in d_beta_y.iter_mut().zip(&params.beta_y) {
        *d += 2.0 * lambda * p;
    }
    for (d, p) in d_eta.iter_mut().zip(&params.eta) {
        *d += 2.0 * lambda * p;
    }
    Ok(Gradients {
        d_beta_x,
        d_beta_y,
        d_eta,
    })
}
