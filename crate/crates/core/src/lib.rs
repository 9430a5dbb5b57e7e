//! Structural estimation of price formation in dealer trading networks.
//!
//! A market is a layered directed graph: one layer per (asset, day), one node
//! per dealer in each layer, and an edge from a seller to every dealer it can
//! sell to. Dealer values solve a Nash-bargaining fixed point; the estimator
//! unrolls that fixed point as a message-passing network and fits cost and
//! bargaining-power coefficients to observed interdealer prices.
//!
//! Modules:
//! - [`market`]: graph model, synthetic generators and CSV persistence.
//! - [`equilibrium`]: latent generation, the value operator and its fixed point.
//! - [`estimator`]: differentiable forward pass, reverse-mode gradients, training.
//! - [`inference`]: bootstrap intervals and fit metrics.
//! - [`baselines`]: centralities and OLS comparison regressions.
//! - [`experiment`]: config-driven pipelines used by the CLI.

// `!(x > 0.0)` is used on purpose so NaN is rejected along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod equilibrium;
mod error;
pub mod estimator;
pub mod exec;
pub mod experiment;
pub mod inference;
pub mod market;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Execution;
