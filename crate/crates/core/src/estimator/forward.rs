use super::params::{dot, logistic};
use super::ModelParams;
use crate::market::TradingGraph;
use crate::{Error, Result};

/// Branch a node's value update took in one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Customer value won (or the node has no buyers).
    Customer,
    /// Best interdealer quote, through this edge, won.
    Edge(usize),
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub layers: usize,
    /// Holding cost per node under the candidate parameters.
    pub c: Vec<f64>,
    /// Bargaining power per edge under the candidate parameters.
    pub pi: Vec<f64>,
    /// `v_layers[l]` holds node values after `l` sweeps; `l = 0..=L`.
    pub v_layers: Vec<Vec<f64>>,
    /// Edge prices of sweep `L` (computed from `v_layers[L - 1]`).
    pub p_final: Vec<f64>,
    /// Highest sweep-`L` quote per node.
    pub pred_best: Vec<Option<f64>>,
    /// Edge attaining `pred_best` (lowest buyer id on ties).
    pub best_edge: Vec<Option<usize>>,
    /// `argmax_choices[l][n]`: branch taken by node `n` in sweep `l + 1`.
    pub argmax_choices: Vec<Vec<Branch>>,
}

/// Noise-free costs `exp(X beta_x + Y beta_y)` and bargaining powers
/// `logistic(E eta)`, then `layers` synchronous message-passing sweeps from
/// `v = u - c`.
pub fn forward(graph: &TradingGraph, params: &ModelParams, layers: usize) -> Result<ForwardTrace> {
    params.check_dims(graph.features().dims())?;
    if layers == 0 {
        return Err(Error::Config("message-passing depth must be at least 1".into()));
    }
    let n = graph.num_nodes();
    let m = graph.num_edges();
    let u = graph.customer_values();

    let c: Vec<f64> = (0..n)
        .map(|i| (dot(graph.x(i), &params.beta_x) + dot(graph.y(i), &params.beta_y)).exp())
        .collect();
    if let Some(i) = c.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "holding cost of {:?} overflowed to {}",
            graph.node_key(i),
            c[i]
        )));
    }
    let pi: Vec<f64> = (0..m).map(|e| logistic(dot(graph.e(e), &params.eta))).collect();

    let mut v_layers = Vec::with_capacity(layers + 1);
    v_layers.push(u.iter().zip(&c).map(|(u, c)| u - c).collect::<Vec<f64>>());
    let mut argmax_choices = Vec::with_capacity(layers);
    let mut p = vec![0.0; m];
    let mut best_price = vec![None; n];
    let mut best_edge = vec![None; n];

    for _ in 0..layers {
        let v = v_layers.last().expect("seeded with v0");
        for e in 0..m {
            p[e] = pi[e] * v[graph.edge_seller(e)] + (1.0 - pi[e]) * v[graph.edge_buyer(e)];
        }
        let mut next = vec![0.0; n];
        let mut choice = vec![Branch::Customer; n];
        for i in 0..n {
            let mut top: Option<(f64, usize)> = None;
            for e in graph.out_edges(i) {
                if top.is_none_or(|(b, _)| p[e] > b) {
                    top = Some((p[e], e));
                }
            }
            best_price[i] = top.map(|t| t.0);
            best_edge[i] = top.map(|t| t.1);
            next[i] = match top {
                Some((b, e)) if b > u[i] => {
                    choice[i] = Branch::Edge(e);
                    -c[i] + b
                }
                _ => -c[i] + u[i],
            };
            if !next[i].is_finite() {
                return Err(Error::Numeric(format!(
                    "dealer value of {:?} is {} in sweep {}",
                    graph.node_key(i),
                    next[i],
                    v_layers.len()
                )));
            }
        }
        v_layers.push(next);
        argmax_choices.push(choice);
    }

    Ok(ForwardTrace {
        layers,
        c,
        pi,
        v_layers,
        p_final: p,
        pred_best: best_price,
        best_edge,
        argmax_choices,
    })
}

impl ForwardTrace {
    /// Recomputes the best quotes from `p_final`; equals `pred_best`.
    pub fn best_from_prices(&self, graph: &TradingGraph) -> Vec<Option<f64>> {
        (0..graph.num_nodes())
            .map(|i| {
                graph
                    .out_edges(i)
                    .map(|e| self.p_final[e])
                    .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))))
            })
            .collect()
    }

    pub fn final_values(&self) -> &[f64] {
        self.v_layers.last().expect("at least v0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{solve, LatentState, SolveSettings};
    use crate::market::{Dims, EdgeKey, FeatureMatrix, FeatureTable};
    use crate::Execution;

    /// Two dealers, zero features: c = 1 and pi = 0.5 for any parameters.
    fn pair() -> TradingGraph {
        let edges = vec![
            EdgeKey { seller: 0, buyer: 1, asset: 0, day: 0 },
            EdgeKey { seller: 1, buyer: 0, asset: 0, day: 0 },
        ];
        let features = FeatureTable {
            x: FeatureMatrix::zeros(1, 1),
            y: FeatureMatrix::zeros(1, 2),
            e: FeatureMatrix::zeros(1, 2),
            u: vec![10.0, 20.0],
            z: None,
        };
        TradingGraph::new(Dims::new(2, 1, 1), edges, features).unwrap()
    }

    #[test]
    fn one_sweep_by_hand() {
        let g = pair();
        let t = forward(&g, &ModelParams::new(vec![0.3], vec![-2.0], vec![5.0]), 1).unwrap();
        assert_eq!(t.c, vec![1.0, 1.0]);
        assert_eq!(t.pi, vec![0.5, 0.5]);
        assert_eq!(t.v_layers[0], vec![9.0, 19.0]);
        assert_eq!(t.v_layers[1], vec![13.0, 19.0]);
        assert_eq!(t.pred_best[0], Some(14.0));
        assert_eq!(t.argmax_choices[0], vec![Branch::Edge(0), Branch::Customer]);
    }

    #[test]
    fn deep_forward_reaches_equilibrium_price() {
        let g = pair();
        let t = forward(&g, &ModelParams::zeros(1, 1, 1), 200).unwrap();
        assert!((t.pred_best[0].unwrap() - 18.0).abs() < 1e-9);
    }

    #[test]
    fn zero_params_give_unit_cost_and_even_power() {
        let cfg = crate::market::GenConfig::dense(5);
        let mut g = crate::market::generate_graph(&cfg, Execution::Sequential).unwrap();
        let mut f = g.features().clone();
        f.x = FeatureMatrix::zeros(1, f.x.rows());
        f.y = FeatureMatrix::zeros(1, f.y.rows());
        f.e = FeatureMatrix::zeros(1, f.e.rows());
        g = TradingGraph::new(g.dims(), g.edges().to_vec(), f).unwrap();
        let t = forward(&g, &ModelParams::zeros(1, 1, 1), 3).unwrap();
        assert!(t.c.iter().all(|&c| c == 1.0));
        assert!(t.pi.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn deterministic_and_consistent_with_solver() {
        let cfg = crate::market::GenConfig::dense(8);
        let g = crate::market::generate_graph(&cfg, Execution::Sequential).unwrap();
        let params = ModelParams::new(vec![0.8], vec![1.1], vec![0.9]);
        let a = forward(&g, &params, 10).unwrap();
        let b = forward(&g, &params, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.best_from_prices(&g), a.pred_best);

        // Ten fixed sweeps of the solver are the same computation.
        let state = LatentState::new(&g, a.c.clone(), a.pi.clone()).unwrap();
        let sol = solve(&g, &state, &SolveSettings::fixed(10), None, Execution::Sequential).unwrap();
        assert_eq!(sol.v, *a.final_values());
        assert_eq!(sol.best_price, a.pred_best);
        assert_eq!(sol.p, a.p_final);
    }

    #[test]
    fn rejects_wrong_dims() {
        let g = pair();
        assert!(forward(&g, &ModelParams::zeros(2, 1, 1), 1).is_err());
        assert!(forward(&g, &ModelParams::zeros(1, 1, 1), 0).is_err());
    }
}
