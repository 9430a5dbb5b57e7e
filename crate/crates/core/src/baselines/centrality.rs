//! Network-position measures on one (asset, day) layer.
//!
//! Degree, eigenvector and betweenness use the undirected collapse of the
//! layer's directed edges; in- and out-degree keep direction.

use std::collections::VecDeque;

use crate::market::TradingGraph;
use crate::{Error, Execution, Result};

/// Directed edge list over dealers `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGraph {
    n: usize,
    out_nbrs: Vec<Vec<usize>>,
    in_nbrs: Vec<Vec<usize>>,
    /// Sorted, deduplicated undirected neighbours.
    nbrs: Vec<Vec<usize>>,
}

impl LayerGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut out_nbrs = vec![Vec::new(); n];
        let mut in_nbrs = vec![Vec::new(); n];
        let mut nbrs = vec![Vec::new(); n];
        for &(s, b) in edges {
            if s >= n || b >= n {
                return Err(Error::InvalidInput(format!("edge ({s}, {b}) outside {n} dealers")));
            }
            if s == b {
                return Err(Error::InvalidInput(format!("self-loop at dealer {s}")));
            }
            out_nbrs[s].push(b);
            in_nbrs[b].push(s);
            nbrs[s].push(b);
            nbrs[b].push(s);
        }
        for list in out_nbrs.iter_mut().chain(in_nbrs.iter_mut()).chain(nbrs.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            n,
            out_nbrs,
            in_nbrs,
            nbrs,
        })
    }

    /// The layer of `graph` at index `layer`, dealers numbered as in the graph.
    pub fn from_trading_graph(graph: &TradingGraph, layer: usize) -> Self {
        let edges: Vec<(usize, usize)> = graph.edges()[graph.layer_edges(layer)]
            .iter()
            .map(|e| (e.seller, e.buyer))
            .collect();
        Self::new(graph.dims().dealers, &edges).expect("graph edges are validated")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.nbrs[i]
    }
}

fn need_two(g: &LayerGraph) -> Result<()> {
    if g.n < 2 {
        return Err(Error::InvalidInput(format!(
            "degree centrality needs at least 2 dealers, got {}",
            g.n
        )));
    }
    Ok(())
}

/// Distinct undirected neighbours over `n - 1`.
pub fn degree_centrality(g: &LayerGraph) -> Result<Vec<f64>> {
    need_two(g)?;
    let d = (g.n - 1) as f64;
    Ok(g.nbrs.iter().map(|v| v.len() as f64 / d).collect())
}

/// Distinct sellers into each dealer over `n - 1`.
pub fn in_degree_centrality(g: &LayerGraph) -> Result<Vec<f64>> {
    need_two(g)?;
    let d = (g.n - 1) as f64;
    Ok(g.in_nbrs.iter().map(|v| v.len() as f64 / d).collect())
}

/// Distinct buyers of each dealer over `n - 1`.
pub fn out_degree_centrality(g: &LayerGraph) -> Result<Vec<f64>> {
    need_two(g)?;
    let d = (g.n - 1) as f64;
    Ok(g.out_nbrs.iter().map(|v| v.len() as f64 / d).collect())
}

fn components(g: &LayerGraph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.n];
    let mut out = Vec::new();
    for start in 0..g.n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut k = 0;
        while k < comp.len() {
            for &j in &g.nbrs[comp[k]] {
                if !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        out.push(comp);
    }
    out
}

/// Leading eigenvector of the undirected adjacency, by power iteration on
/// `A + I` within each connected component (unit 2-norm per component),
/// then divided by the largest entry overall. Isolated dealers get 0.
pub fn eigenvector_centrality(g: &LayerGraph, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if g.is_empty() {
        return Err(Error::InvalidInput("eigenvector centrality of an empty layer".into()));
    }
    let mut x = vec![0.0; g.n];
    for comp in components(g) {
        if comp.len() < 2 {
            continue;
        }
        let start = 1.0 / (comp.len() as f64).sqrt();
        for &i in &comp {
            x[i] = start;
        }
        let mut converged = false;
        for _ in 0..max_iter {
            let next: Vec<f64> = comp
                .iter()
                .map(|&i| x[i] + g.nbrs[i].iter().map(|&j| x[j]).sum::<f64>())
                .collect();
            let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut change: f64 = 0.0;
            for (&i, v) in comp.iter().zip(&next) {
                let v = v / norm;
                change = change.max((v - x[i]).abs());
                x[i] = v;
            }
            if change < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!(
                "eigenvector centrality did not converge in {max_iter} iterations"
            )));
        }
    }
    let top = x.iter().copied().fold(0.0, f64::max);
    if top > 0.0 {
        x.iter_mut().for_each(|v| *v /= top);
    }
    Ok(x)
}

/// Brandes betweenness on the undirected collapse, normalised by the
/// `(n - 1)(n - 2) / 2` pairs that exclude the dealer.
pub fn betweenness_centrality(g: &LayerGraph) -> Vec<f64> {
    let n = g.n;
    let mut bc = vec![0.0; n];
    if n < 3 {
        return bc;
    }
    let mut sigma = vec![0.0; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for s in 0..n {
        sigma.iter_mut().for_each(|v| *v = 0.0);
        dist.iter_mut().for_each(|v| *v = usize::MAX);
        delta.iter_mut().for_each(|v| *v = 0.0);
        preds.iter_mut().for_each(Vec::clear);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &g.nbrs[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = order.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // Each unordered pair was counted from both ends.
    let pairs = ((n - 1) * (n - 2)) as f64 / 2.0;
    bc.iter_mut().for_each(|v| *v = *v / 2.0 / pairs);
    bc
}

pub const EIGENVECTOR_TOL: f64 = 1e-10;
pub const EIGENVECTOR_MAX_ITER: usize = 100_000;

/// Measures available to the comparison regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    InDegree,
    OutDegree,
    Eigenvector,
    Betweenness,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::InDegree => "in_degree",
            Measure::OutDegree => "out_degree",
            Measure::Eigenvector => "eigenvector",
            Measure::Betweenness => "betweenness",
        }
    }
}

/// All measures for every node of a graph, indexed by node.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable {
    pub degree: Vec<f64>,
    pub in_degree: Vec<f64>,
    pub out_degree: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub betweenness: Vec<f64>,
}

impl CentralityTable {
    pub fn compute(graph: &TradingGraph, exec: Execution) -> Result<Self> {
        let dims = graph.dims();
        let per_layer = exec.map(dims.layers(), |l| -> Result<[Vec<f64>; 5]> {
            let g = LayerGraph::from_trading_graph(graph, l);
            Ok([
                degree_centrality(&g)?,
                in_degree_centrality(&g)?,
                out_degree_centrality(&g)?,
                eigenvector_centrality(&g, EIGENVECTOR_TOL, EIGENVECTOR_MAX_ITER)?,
                betweenness_centrality(&g),
            ])
        });
        let mut t = CentralityTable {
            degree: Vec::with_capacity(graph.num_nodes()),
            in_degree: Vec::with_capacity(graph.num_nodes()),
            out_degree: Vec::with_capacity(graph.num_nodes()),
            eigenvector: Vec::with_capacity(graph.num_nodes()),
            betweenness: Vec::with_capacity(graph.num_nodes()),
        };
        // Nodes are numbered layer-major, so concatenation lines up.
        for layer in per_layer {
            let [d, i, o, e, b] = layer?;
            t.degree.extend(d);
            t.in_degree.extend(i);
            t.out_degree.extend(o);
            t.eigenvector.extend(e);
            t.betweenness.extend(b);
        }
        Ok(t)
    }

    pub fn get(&self, measure: Measure, node: usize) -> f64 {
        match measure {
            Measure::InDegree => self.in_degree[node],
            Measure::OutDegree => self.out_degree[node],
            Measure::Eigenvector => self.eigenvector[node],
            Measure::Betweenness => self.betweenness[node],
        }
    }
}
