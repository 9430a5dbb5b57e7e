use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backward::{backward, loss};
use super::forward::forward;
use super::optim::{step, Optimizer, OptimizerState};
use super::ModelParams;
use crate::equilibrium::ObservedTrade;
use crate::market::TradingGraph;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Message-passing sweeps in the forward pass.
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// L2 weight on all coefficients.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    /// Half-width of the uniform initialisation interval.
    #[serde(default = "default_init_range")]
    pub init_range: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_layers() -> usize {
    10
}
fn default_lr() -> f64 {
    0.01
}
fn default_epochs() -> usize {
    300
}
fn default_init_range() -> f64 {
    0.1
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            layers: default_layers(),
            lr: default_lr(),
            epochs: default_epochs(),
            lambda: 0.0,
            optimizer: Optimizer::default(),
            init_range: default_init_range(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("train.layers must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("train.lr must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("train.epochs must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("train.lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return Err(Error::Config(format!(
                "train.init_range must be >= 0, got {}",
                self.init_range
            )));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    /// Total loss before each epoch's update.
    pub loss_trajectory: Vec<f64>,
    /// Unweighted-by-lambda MSE at the returned parameters.
    pub final_mse: f64,
    /// Predicted best price per node at the returned parameters.
    pub pred_best: Vec<Option<f64>>,
    pub epochs_run: usize,
}

impl FitResult {
    /// Predicted price for each observation, in input order.
    pub fn predictions(&self, observed: &[ObservedTrade]) -> Vec<f64> {
        observed
            .iter()
            .map(|o| self.pred_best[o.node].expect("observed sellers have buyers"))
            .collect()
    }
}

/// Fits from a uniform draw on `[-init_range, init_range]` taken from the
/// `Init` stream of `config.seed`.
pub fn train(
    graph: &TradingGraph,
    observed: &[ObservedTrade],
    weights: Option<&[f64]>,
    config: &TrainConfig,
) -> Result<FitResult> {
    let mut rng = stream(config.seed, Stream::Init);
    let init = ModelParams::uniform(graph.features().dims(), config.init_range, &mut rng);
    train_from(graph, observed, weights, config, init)
}

/// Fits starting at `init`.
pub fn train_from(
    graph: &TradingGraph,
    observed: &[ObservedTrade],
    weights: Option<&[f64]>,
    config: &TrainConfig,
    init: ModelParams,
) -> Result<FitResult> {
    config.validate()?;
    init.check_dims(graph.features().dims())?;
    if observed.is_empty() {
        return Err(Error::InvalidInput("training needs at least one observed price".into()));
    }

    let diverged = |epoch: usize, err: Error| match err {
        Error::Numeric(_) => Error::Diverged {
            epoch,
            loss: f64::NAN,
        },
        other => other,
    };

    let mut params = init;
    let mut state = OptimizerState::new(params.len());
    let mut trajectory = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let trace = forward(graph, &params, config.layers).map_err(|e| diverged(epoch, e))?;
        let value = loss(&trace, observed, weights, &params, config.lambda)?;
        if !value.total().is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: value.total(),
            });
        }
        trajectory.push(value.total());
        let grads = backward(graph, &trace, observed, weights, &params, config.lambda)?;
        if !grads.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: value.total(),
            });
        }
        params = step(&params, &grads, &mut state, &config.optimizer, config.lr)?;
    }

    let trace = forward(graph, &params, config.layers).map_err(|e| diverged(config.epochs, e))?;
    let value = loss(&trace, observed, weights, &params, config.lambda)?;
    if !value.total().is_finite() {
        return Err(Error::Diverged {
            epoch: config.epochs,
            loss: value.total(),
        });
    }
    log::debug!(
        "fit finished after {} epochs: mse {:.6}, params {:?}",
        config.epochs,
        value.mse,
        params.to_vec()
    );
    Ok(FitResult {
        params,
        loss_trajectory: trajectory,
        final_mse: value.mse,
        pred_best: trace.pred_best,
        epochs_run: config.epochs,
    })
}

/// On-disk form of a fit: coefficients, the settings that produced them and
/// summary metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub params: ModelParams,
    pub train: TrainConfig,
    pub metrics: FitMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub final_mse: f64,
    pub final_loss: f64,
    pub epochs_run: usize,
    pub n_obs: usize,
}

impl FittedModel {
    pub fn new(fit: &FitResult, train: &TrainConfig, n_obs: usize) -> Self {
        Self {
            params: fit.params.clone(),
            train: train.clone(),
            metrics: FitMetrics {
                final_mse: fit.final_mse,
                final_loss: fit.final_mse + train.lambda * fit.params.squared_norm(),
                epochs_run: fit.epochs_run,
                n_obs,
            },
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self)
            .map_err(|e| Error::InvalidInput(format!("cannot serialise fitted model: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
