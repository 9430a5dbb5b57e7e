//! Structural estimator: the value recursion unrolled for `L` sweeps as a
//! differentiable network, fitted to observed interdealer prices.

mod backward;
mod customer;
mod forward;
mod latents;
mod optim;
mod params;
mod train;

pub use backward::{backward, loss, Gradients, LossValue};
pub use customer::{estimate_customer_values, CustomerDesign, CustomerValueFit};
pub use forward::{forward, Branch, ForwardTrace};
pub use latents::{predict_latents, PredictedLatents};
pub use optim::{step, Optimizer, OptimizerState};
pub use params::ModelParams;
pub(crate) use params::{dot, logistic};
pub use train::{train, train_from, FitMetrics, FitResult, FittedModel, TrainConfig};
