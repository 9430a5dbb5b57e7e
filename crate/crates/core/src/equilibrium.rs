//! Dealer-value equilibrium.
//!
//! For a fixed (asset, day) layer the value operator is
//!
//! ```text
//! T_i(v) = -c_i + max( max_{j in N(i)} [ pi_ij v_i + (1 - pi_ij) v_j ], u_i )
//! ```
//!
//! which is monotone and non-expansive in the sup norm. It is not a strict
//! contraction: shifting every value of a layer by the same constant moves
//! each interdealer branch by that constant. Iteration from `u - c` still
//! converges: the sweeps increase monotonically and stay below `max(u - c)`.
//! [`solve`] iterates it with synchronous (Jacobi) sweeps, one layer at a time.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::estimator::{dot, logistic};
use crate::estimator::ModelParams;
use crate::market::{EdgeKey, GenConfig, TradingGraph};
use crate::rng::{stream, Stream};
use crate::{Error, Execution, Result};

/// Latent primitives of a market: holding cost per node, buyer bargaining
/// power per edge and customer value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub c: Vec<f64>,
    pub pi: Vec<f64>,
    pub u: Vec<f64>,
}

impl LatentState {
    pub fn new(graph: &TradingGraph, c: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        Self::with_customer_values(graph, c, pi, graph.customer_values().to_vec())
    }

    pub fn with_customer_values(graph: &TradingGraph, c: Vec<f64>, pi: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        for (what, got, expected) in [
            ("holding costs", c.len(), graph.num_nodes()),
            ("bargaining powers", pi.len(), graph.num_edges()),
            ("customer values", u.len(), graph.num_nodes()),
        ] {
            if got != expected {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected,
                    got,
                });
            }
        }
        if let Some(i) = c.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "holding cost of {:?} must be positive, got {}",
                graph.node_key(i),
                c[i]
            )));
        }
        if let Some(e) = pi.iter().position(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidInput(format!(
                "bargaining power of {:?} must lie in (0, 1), got {}",
                graph.edges()[e],
                pi[e]
            )));
        }
        Ok(Self { c, pi, u })
    }

    /// Smallest `min(pi, 1 - pi)` over edges; 0.5 for an edgeless graph.
    pub fn bargaining_margin(&self) -> f64 {
        self.pi
            .iter()
            .map(|&p| p.min(1.0 - p))
            .fold(0.5, f64::min)
    }

    /// `1 - bargaining_margin()`, the textbook contraction modulus. It
    /// bounds one-sweep shrinkage only for difference vectors that are not
    /// close to constant on interdealer chains; see the module docs.
    pub fn contraction_modulus(&self) -> f64 {
        1.0 - self.bargaining_margin()
    }
}

/// Holding costs `c = exp(X beta_x + Y beta_y + eps)`, `eps ~ N(0, sigma_c^2)`,
/// one draw per node in node order.
pub fn gen_costs<R: Rng + ?Sized>(
    graph: &TradingGraph,
    beta_x: &[f64],
    beta_y: &[f64],
    sigma_c: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (dx, dy, _) = graph.features().dims();
    check_len("beta_x", dx, beta_x.len())?;
    check_len("beta_y", dy, beta_y.len())?;
    Ok((0..graph.num_nodes())
        .map(|n| {
            let eps = if sigma_c > 0.0 {
                sigma_c * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            (dot(graph.x(n), beta_x) + dot(graph.y(n), beta_y) + eps).exp()
        })
        .collect())
}

/// Bargaining powers `pi = logistic(E eta + nu)`, `nu ~ N(0, sigma_pi^2)`,
/// one draw per edge in edge order.
pub fn gen_bargaining<R: Rng + ?Sized>(
    graph: &TradingGraph,
    eta: &[f64],
    sigma_pi: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_len("eta", graph.features().e.dim(), eta.len())?;
    Ok((0..graph.num_edges())
        .map(|e| {
            let nu = if sigma_pi > 0.0 {
                sigma_pi * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            logistic(dot(graph.e(e), eta) + nu)
        })
        .collect())
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            what: what.into(),
            expected,
            got,
        });
    }
    Ok(())
}

/// Noisy latents from the generating parameters in `config`.
pub fn generate_latents(graph: &TradingGraph, config: &GenConfig) -> Result<LatentState> {
    let p = &config.true_params;
    let mut rng = stream(config.seed, Stream::CostNoise);
    let c = gen_costs(graph, &p.beta_x, &p.beta_y, config.noise.sigma_c, &mut rng)?;
    let mut rng = stream(config.seed, Stream::BargainingNoise);
    let pi = gen_bargaining(graph, &p.eta, config.noise.sigma_pi, &mut rng)?;
    LatentState::new(graph, c, pi)
}

/// Noise-free latents implied by `params`.
pub fn latents_from_params(graph: &TradingGraph, params: &ModelParams) -> Result<LatentState> {
    let mut rng = stream(0, Stream::Custom(0));
    let c = gen_costs(graph, &params.beta_x, &params.beta_y, 0.0, &mut rng)?;
    let pi = gen_bargaining(graph, &params.eta, 0.0, &mut rng)?;
    if let Some(i) = c.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Numeric(format!(
            "holding cost of {:?} is {}",
            graph.node_key(i),
            c[i]
        )));
    }
    // Saturated logits give pi of exactly 0 or 1; keep them strictly inside.
    let pi = pi
        .into_iter()
        .map(|p| p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
        .collect();
    LatentState::new(graph, c, pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Exactly `max_iters` sweeps.
    FixedIterations,
    /// Stop once the sup-norm change of a sweep drops below `tol`.
    ToTolerance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub max_iters: usize,
    pub tol: f64,
    pub mode: SolveMode,
}

impl SolveSettings {
    pub fn fixed(iterations: usize) -> Self {
        Self {
            max_iters: iterations,
            tol: 0.0,
            mode: SolveMode::FixedIterations,
        }
    }

    pub fn to_tolerance(tol: f64, max_iters: usize) -> Self {
        Self {
            max_iters,
            tol,
            mode: SolveMode::ToTolerance,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.mode == SolveMode::ToTolerance && !(self.tol > 0.0) {
            return Err(Error::Config("tolerance mode needs tol > 0".into()));
        }
        Ok(())
    }
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self::to_tolerance(1e-10, 100_000)
    }
}

/// What a seller does with its unit of the asset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Sells to dealer `buyer` through edge `edge` at `price`.
    InterdealerSale { buyer: usize, edge: usize, price: f64 },
    /// Best interdealer quote does not beat the customer value.
    CustomerSale { price: f64 },
    /// No potential buyers; sells to customers at `price = u`.
    Isolated { price: f64 },
}

impl Outcome {
    pub fn price(&self) -> f64 {
        match *self {
            Outcome::InterdealerSale { price, .. }
            | Outcome::CustomerSale { price }
            | Outcome::Isolated { price } => price,
        }
    }

    pub fn is_interdealer(&self) -> bool {
        matches!(self, Outcome::InterdealerSale { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    /// Dealer values after the last sweep.
    pub v: Vec<f64>,
    /// Edge prices computed in the last sweep.
    pub p: Vec<f64>,
    /// Highest outgoing price per node, `None` without outgoing edges.
    pub best_price: Vec<Option<f64>>,
    /// Edge attaining `best_price` (lowest buyer id on ties).
    pub best_edge: Vec<Option<usize>>,
    pub outcome: Vec<Outcome>,
    /// Largest sweep count over layers.
    pub iterations_used: usize,
    /// Largest sup-norm change of the final sweep over layers.
    pub final_residual: f64,
}

/// A realised interdealer sale: the estimator's price data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedTrade {
    /// Seller node index.
    pub node: usize,
    pub edge: EdgeKey,
    pub price: f64,
}

/// One application of the value operator to all nodes.
pub fn apply_operator(graph: &TradingGraph, state: &LatentState, v: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; v.len()];
    let mut p = vec![0.0; graph.num_edges()];
    let mut best = vec![None; v.len()];
    for layer in 0..graph.dims().layers() {
        sweep(graph, state, layer, v, &mut next, &mut p, &mut best);
    }
    next
}

/// Synchronous sweep over one layer. Reads `v`, writes the layer's entries
/// of `next`, `p` and `best`.
fn sweep(
    graph: &TradingGraph,
    state: &LatentState,
    layer: usize,
    v: &[f64],
    next: &mut [f64],
    p: &mut [f64],
    best: &mut [Option<(f64, usize)>],
) {
    for node in graph.layer_nodes(layer) {
        let mut top: Option<(f64, usize)> = None;
        for e in graph.out_edges(node) {
            let pi = state.pi[e];
            let price = pi * v[node] + (1.0 - pi) * v[graph.edge_buyer(e)];
            p[e] = price;
            if top.is_none_or(|(b, _)| price > b) {
                top = Some((price, e));
            }
        }
        best[node] = top;
        let u = state.u[node];
        let take = match top {
            Some((b, _)) if b > u => b,
            _ => u,
        };
        next[node] = -state.c[node] + take;
    }
}

struct LayerSolution {
    v: Vec<f64>,
    p: Vec<f64>,
    best: Vec<Option<(f64, usize)>>,
    iterations: usize,
    residual: f64,
}

fn solve_layer(
    graph: &TradingGraph,
    state: &LatentState,
    layer: usize,
    settings: &SolveSettings,
    v0: &[f64],
) -> Result<LayerSolution> {
    // Work on full-length buffers but only touch this layer's slots.
    let nodes = graph.layer_nodes(layer);
    let edges = graph.layer_edges(layer);
    let mut v = v0.to_vec();
    let mut next = v0.to_vec();
    let mut p = vec![0.0; graph.num_edges()];
    let mut best = vec![None; graph.num_nodes()];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < settings.max_iters {
        sweep(graph, state, layer, &v, &mut next, &mut p, &mut best);
        iterations += 1;
        residual = 0.0;
        for n in nodes.clone() {
            if !next[n].is_finite() {
                return Err(Error::Numeric(format!(
                    "dealer value of {:?} is {} after sweep {iterations}",
                    graph.node_key(n),
                    next[n]
                )));
            }
            residual = f64::max(residual, (next[n] - v[n]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if settings.mode == SolveMode::ToTolerance && residual < settings.tol {
            break;
        }
    }
    Ok(LayerSolution {
        v: v[nodes.clone()].to_vec(),
        p: p[edges].to_vec(),
        best: best[nodes].to_vec(),
        iterations,
        residual,
    })
}

/// Iterates the value operator from `v0` (default `u - c`) and derives
/// prices, best quotes and realised outcomes from the last sweep.
pub fn solve(
    graph: &TradingGraph,
    state: &LatentState,
    settings: &SolveSettings,
    v0: Option<&[f64]>,
    exec: Execution,
) -> Result<EquilibriumSolution> {
    settings.validate()?;
    let default_start: Vec<f64>;
    let v0 = match v0 {
        Some(v) => {
            check_len("initial values", graph.num_nodes(), v.len())?;
            v
        }
        None => {
            default_start = state.u.iter().zip(&state.c).map(|(u, c)| u - c).collect();
            &default_start
        }
    };
    if let Some(n) = v0.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "initial value of {:?} is {}",
            graph.node_key(n),
            v0[n]
        )));
    }
    let layers = exec.map(graph.dims().layers(), |l| solve_layer(graph, state, l, settings, v0));

    let mut v = Vec::with_capacity(graph.num_nodes());
    let mut p = Vec::with_capacity(graph.num_edges());
    let mut best = Vec::with_capacity(graph.num_nodes());
    let mut iterations_used = 0;
    let mut final_residual: f64 = 0.0;
    for layer in layers {
        let layer = layer?;
        v.extend(layer.v);
        p.extend(layer.p);
        best.extend(layer.best);
        iterations_used = iterations_used.max(layer.iterations);
        final_residual = final_residual.max(layer.residual);
    }
    let outcome = realize_outcomes(graph, &state.u, &best);
    Ok(EquilibriumSolution {
        v,
        p,
        best_price: best.iter().map(|b| b.map(|(price, _)| price)).collect(),
        best_edge: best.iter().map(|b| b.map(|(_, e)| e)).collect(),
        outcome,
        iterations_used,
        final_residual,
    })
}

fn realize_outcomes(graph: &TradingGraph, u: &[f64], best: &[Option<(f64, usize)>]) -> Vec<Outcome> {
    best.iter()
        .enumerate()
        .map(|(node, b)| match *b {
            Some((price, edge)) if price > u[node] => Outcome::InterdealerSale {
                buyer: graph.edges()[edge].buyer,
                edge,
                price,
            },
            Some(_) => Outcome::CustomerSale { price: u[node] },
            None => Outcome::Isolated { price: u[node] },
        })
        .collect()
}

/// Interdealer sales, in node order. Customer sales are not observed.
pub fn realize_trades(graph: &TradingGraph, solution: &EquilibriumSolution) -> Vec<ObservedTrade> {
    solution
        .outcome
        .iter()
        .enumerate()
        .filter_map(|(node, o)| match *o {
            Outcome::InterdealerSale { edge, price, .. } => Some(ObservedTrade {
                node,
                edge: graph.edges()[edge],
                price,
            }),
            _ => None,
        })
        .collect()
}
