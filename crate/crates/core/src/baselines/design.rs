use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::centrality::{CentralityTable, Measure};
use crate::equilibrium::ObservedTrade;
use crate::market::TradingGraph;
use crate::{Error, Result};

/// The reduced-form price regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionSpec {
    Basic,
    Degree,
    Eigenvector,
    Betweenness,
    AllCentrality,
    EigenvectorInteractions,
    CentralityInteractions,
}

const ALL_MEASURES: [Measure; 4] = [Measure::InDegree, Measure::OutDegree, Measure::Eigenvector, Measure::Betweenness];

impl RegressionSpec {
    pub const ALL: [RegressionSpec; 7] = [
        RegressionSpec::Basic,
        RegressionSpec::Degree,
        RegressionSpec::Eigenvector,
        RegressionSpec::Betweenness,
        RegressionSpec::AllCentrality,
        RegressionSpec::EigenvectorInteractions,
        RegressionSpec::CentralityInteractions,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RegressionSpec::Basic => "OLS Basic",
            RegressionSpec::Degree => "OLS + Degree",
            RegressionSpec::Eigenvector => "OLS + Eigenvector",
            RegressionSpec::Betweenness => "OLS + Betweenness",
            RegressionSpec::AllCentrality => "OLS + All Centrality",
            RegressionSpec::EigenvectorInteractions => "OLS + Eigenvector Interactions",
            RegressionSpec::CentralityInteractions => "OLS + Centrality Interactions",
        }
    }

    /// Seller and buyer levels of each listed measure enter the design.
    pub fn measures(self) -> &'static [Measure] {
        match self {
            RegressionSpec::Basic => &[],
            RegressionSpec::Degree => &[Measure::InDegree, Measure::OutDegree],
            RegressionSpec::Eigenvector | RegressionSpec::EigenvectorInteractions => &[Measure::Eigenvector],
            RegressionSpec::Betweenness => &[Measure::Betweenness],
            RegressionSpec::AllCentrality | RegressionSpec::CentralityInteractions => &ALL_MEASURES,
        }
    }

    /// Whether each measure is also interacted with every base covariate.
    pub fn interactions(self) -> bool {
        matches!(
            self,
            RegressionSpec::EigenvectorInteractions | RegressionSpec::CentralityInteractions
        )
    }

    /// Column count for feature dimensions `(d_x, d_y, d_e)`, intercept included.
    pub fn n_columns(self, dims: (usize, usize, usize)) -> usize {
        let base = dims.0 + 2 * dims.1 + dims.2;
        let per_measure = 2 + if self.interactions() { 2 * base } else { 0 };
        1 + base + self.measures().len() * per_measure
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub columns: Vec<String>,
    /// Row-major, one row per trade.
    pub matrix: Vec<f64>,
    pub response: Vec<f64>,
}

impl Design {
    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let k = self.n_cols();
        (0..self.n_rows()).map(|i| self.matrix[i * k + j]).collect()
    }
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}_{i}")).collect()
    }
}

/// One row per trade: intercept, `X`, seller `Y`, buyer `Y`, `E`, then for
/// each measure of `spec` the seller and buyer levels and, for interaction
/// specs, seller and buyer level times every base covariate.
pub fn build_design(
    graph: &TradingGraph,
    observed: &[ObservedTrade],
    centrality: &CentralityTable,
    spec: RegressionSpec,
) -> Result<Design> {
    if observed.is_empty() {
        return Err(Error::InvalidInput("design needs at least one observed trade".into()));
    }
    let (dx, dy, de) = graph.features().dims();
    let mut base_names = indexed("X", dx);
    base_names.extend(indexed("Y_seller", dy));
    base_names.extend(indexed("Y_buyer", dy));
    base_names.extend(indexed("E", de));

    let mut columns = vec!["intercept".to_string()];
    columns.extend(base_names.iter().cloned());
    for &m in spec.measures() {
        for side in ["seller", "buyer"] {
            columns.push(format!("{side}_{}", m.name()));
        }
        if spec.interactions() {
            for side in ["seller", "buyer"] {
                for b in &base_names {
                    columns.push(format!("{side}_{}*{b}", m.name()));
                }
            }
        }
    }
    let mut seen = HashSet::new();
    if let Some(dup) = columns.iter().find(|c| !seen.insert(c.as_str())) {
        return Err(Error::InvalidInput(format!("duplicate design column {dup}")));
    }
    debug_assert_eq!(columns.len(), spec.n_columns((dx, dy, de)));

    let dims = graph.dims();
    let mut matrix = Vec::with_capacity(observed.len() * columns.len());
    let mut response = Vec::with_capacity(observed.len());
    for t in observed {
        let seller = t.node;
        let buyer = dims.node_index(t.edge.buyer, t.edge.asset, t.edge.day);
        let edge = graph
            .find_edge(t.edge.seller, t.edge.buyer, t.edge.asset, t.edge.day)
            .ok_or_else(|| Error::InvalidInput(format!("observed trade {:?} is not an edge", t.edge)))?;
        let mut base = graph.x(seller).to_vec();
        base.extend_from_slice(graph.y(seller));
        base.extend_from_slice(graph.y(buyer));
        base.extend_from_slice(graph.e(edge));

        matrix.push(1.0);
        matrix.extend_from_slice(&base);
        for &m in spec.measures() {
            let cs = centrality.get(m, seller);
            let cb = centrality.get(m, buyer);
            matrix.push(cs);
            matrix.push(cb);
            if spec.interactions() {
                matrix.extend(base.iter().map(|b| cs * b));
                matrix.extend(base.iter().map(|b| cb * b));
            }
        }
        response.push(t.price);
    }
    Ok(Design {
        columns,
        matrix,
        response,
    })
}
