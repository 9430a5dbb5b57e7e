//! Fit metrics and percentile-bootstrap inference.

mod bootstrap;
mod metrics;

pub use bootstrap::{
    bootstrap, resample_observed, summarize_draws, BootstrapConfig, BootstrapResult, DrawSummary,
    MAX_DIVERGED_FRACTION,
};
pub use metrics::{aic, bic, gaussian_lnl, mae, mse, percentile, r2, MetricsReport};
