//! Pre-estimation of customer values from observed customer sales:
//! `ln price = gamma_0 + X gamma_x + Y gamma_y + Z gamma_z`, `u_hat = exp(fit)`.

use crate::baselines::ols::{lstsq, RankPolicy};
use crate::market::TradingGraph;
use crate::{Error, Result};

/// Which covariate blocks enter the log-price regression. An intercept is
/// always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CustomerDesign {
    pub use_x: bool,
    pub use_y: bool,
    pub use_z: bool,
}

impl Default for CustomerDesign {
    fn default() -> Self {
        Self {
            use_x: true,
            use_y: true,
            use_z: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomerValueFit {
    pub names: Vec<String>,
    pub gamma: Vec<f64>,
    /// Predicted customer value for every node of the graph.
    pub u_hat: Vec<f64>,
}

fn row(graph: &TradingGraph, node: usize, design: CustomerDesign) -> Vec<f64> {
    let mut r = vec![1.0];
    if design.use_x {
        r.extend_from_slice(graph.x(node));
    }
    if design.use_y {
        r.extend_from_slice(graph.y(node));
    }
    if design.use_z {
        if let Some(z) = graph.z(node) {
            r.extend_from_slice(z);
        }
    }
    r
}

fn names(graph: &TradingGraph, design: CustomerDesign) -> Vec<String> {
    let (dx, dy, _) = graph.features().dims();
    let dz = graph.features().z.as_ref().map_or(0, |z| z.dim());
    let mut out = vec!["intercept".to_string()];
    for (on, prefix, n) in [(design.use_x, "X", dx), (design.use_y, "Y", dy), (design.use_z, "Z", dz)] {
        if on {
            out.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
    }
    out
}

/// OLS of log customer-sale prices on the selected covariates.
pub fn estimate_customer_values(
    graph: &TradingGraph,
    sales: &[(usize, f64)],
    design: CustomerDesign,
) -> Result<CustomerValueFit> {
    if sales.is_empty() {
        return Err(Error::InvalidInput("no customer sales to fit".into()));
    }
    let names = names(graph, design);
    let mut matrix = Vec::with_capacity(sales.len() * names.len());
    let mut response = Vec::with_capacity(sales.len());
    for &(node, price) in sales {
        if node >= graph.num_nodes() {
            return Err(Error::InvalidInput(format!("customer sale at unknown node {node}")));
        }
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "customer price at {:?} must be positive, got {price}",
                graph.node_key(node)
            )));
        }
        matrix.extend(row(graph, node, design));
        response.push(price.ln());
    }
    let sol = lstsq(&matrix, names.len(), &response, &names, RankPolicy::Error)?;
    let u_hat = (0..graph.num_nodes())
        .map(|i| {
            row(graph, i, design)
                .iter()
                .zip(&sol.coefficients)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .exp()
        })
        .collect();
    Ok(CustomerValueFit {
        names,
        gamma: sol.coefficients,
        u_hat,
    })
}
