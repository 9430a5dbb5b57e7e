//! Reduced-form comparison: network centralities and OLS price regressions.

pub mod centrality;
mod design;
pub mod ols;

pub use centrality::{
    betweenness_centrality, degree_centrality, eigenvector_centrality, in_degree_centrality,
    out_degree_centrality, CentralityTable, LayerGraph, Measure,
};
pub use design::{build_design, Design, RegressionSpec};
pub use ols::{lstsq, ols_fit, LstsqSolution, RankPolicy, RegressionResult};

use crate::equilibrium::ObservedTrade;
use crate::inference::MetricsReport;
use crate::market::TradingGraph;
use crate::{Execution, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineOutcome {
    Fitted(RegressionResult),
    /// As many independent columns as trades: the fit interpolates, leaving
    /// no residual variance to score.
    Saturated { rows: usize, rank: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub spec: RegressionSpec,
    pub columns: Vec<String>,
    pub outcome: BaselineOutcome,
}

impl BaselineRow {
    pub fn metrics(&self) -> Option<&MetricsReport> {
        match &self.outcome {
            BaselineOutcome::Fitted(r) => Some(&r.metrics),
            BaselineOutcome::Saturated { .. } => None,
        }
    }
}

/// Fits every spec to the same trades. Dependent columns are dropped with a
/// warning; the reported parameter count stays the full column count.
pub fn run_baseline_suite(graph: &TradingGraph, observed: &[ObservedTrade], exec: Execution) -> Result<Vec<BaselineRow>> {
    let centrality = CentralityTable::compute(graph, exec)?;
    let rows = exec.map(RegressionSpec::ALL.len(), |k| -> Result<BaselineRow> {
        let spec = RegressionSpec::ALL[k];
        let d = build_design(graph, observed, &centrality, spec)?;
        let sol = lstsq(&d.matrix, d.n_cols(), &d.response, &d.columns, RankPolicy::DropAndWarn)?;
        let outcome = if sol.rank >= d.n_rows() {
            log::warn!(
                "{}: {} independent columns for {} trades; fit is saturated",
                spec.label(),
                sol.rank,
                d.n_rows()
            );
            BaselineOutcome::Saturated {
                rows: d.n_rows(),
                rank: sol.rank,
            }
        } else {
            let metrics = MetricsReport::from_predictions(&sol.fitted, &d.response, d.n_cols())?;
            BaselineOutcome::Fitted(RegressionResult {
                columns: d.columns.clone(),
                coefficients: sol.coefficients,
                dropped: sol.dropped,
                fitted: sol.fitted,
                residuals: sol.residuals,
                metrics,
            })
        };
        Ok(BaselineRow {
            spec,
            columns: d.columns,
            outcome,
        })
    });
    rows.into_iter().collect()
}
