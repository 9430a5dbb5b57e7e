use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::percentile;
use crate::equilibrium::ObservedTrade;
use crate::estimator::{train_from, ModelParams, TrainConfig};
use crate::market::TradingGraph;
use crate::rng::{stream, Stream};
use crate::{Error, Execution, Result};

/// Share of replicates allowed to diverge before the run is abandoned.
pub const MAX_DIVERGED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Draws per replicate; the number of observed prices if unset.
    #[serde(default)]
    pub resample_size: Option<usize>,
    /// Start every replicate at the point estimate instead of a fresh draw.
    #[serde(default)]
    pub warm_start: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_replicates() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.05
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: default_replicates(),
            alpha: default_alpha(),
            resample_size: None,
            warm_start: false,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Config("bootstrap.replicates must be at least 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("bootstrap.alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.resample_size == Some(0) {
            return Err(Error::Config("bootstrap.resample_size must be positive".into()));
        }
        Ok(())
    }
}

/// Multiplicity of each observation after drawing `resample_size` indices
/// uniformly with replacement.
pub fn resample_observed<R: Rng + ?Sized>(n_observed: usize, resample_size: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n_observed == 0 {
        return Err(Error::InvalidInput("cannot resample an empty observation set".into()));
    }
    let mut weights = vec![0.0; n_observed];
    for _ in 0..resample_size {
        weights[rng.random_range(0..n_observed)] += 1.0;
    }
    Ok(weights)
}

/// Per-parameter summary of a set of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawSummary {
    pub mean: Vec<f64>,
    /// Sample standard deviation (denominator `B - 1`).
    pub se: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
}

/// Mean, standard error and percentile interval at level `1 - alpha`.
pub fn summarize_draws(draws: &[Vec<f64>], alpha: f64) -> Result<DrawSummary> {
    let Some(first) = draws.first() else {
        return Err(Error::InvalidInput("no bootstrap draws to summarise".into()));
    };
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k = first.len();
    if let Some(bad) = draws.iter().find(|d| d.len() != k) {
        return Err(Error::Dimension {
            what: "bootstrap draw".into(),
            expected: k,
            got: bad.len(),
        });
    }
    let b = draws.len() as f64;
    let mut out = DrawSummary {
        mean: Vec::with_capacity(k),
        se: Vec::with_capacity(k),
        ci_lower: Vec::with_capacity(k),
        ci_upper: Vec::with_capacity(k),
    };
    for j in 0..k {
        let mut col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        let mean = col.iter().sum::<f64>() / b;
        let var = if draws.len() > 1 {
            col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (b - 1.0)
        } else {
            0.0
        };
        col.sort_by(f64::total_cmp);
        out.mean.push(mean);
        out.se.push(var.sqrt());
        out.ci_lower.push(percentile(&col, alpha / 2.0)?);
        out.ci_upper.push(percentile(&col, 1.0 - alpha / 2.0)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub names: Vec<String>,
    /// Replicate index of each kept draw.
    pub replicate_ids: Vec<usize>,
    pub draws: Vec<ModelParams>,
    /// Replicates dropped because training diverged.
    pub skipped: Vec<usize>,
    pub alpha: f64,
    pub summary: DrawSummary,
}

/// Retrains on `replicates` weighted resamples of `observed`. Replicate `b`
/// draws its weights from `BootstrapResample(b)` and, unless warm-started
/// from `point`, its initial parameters from `BootstrapInit(b)`.
pub fn bootstrap(
    graph: &TradingGraph,
    observed: &[ObservedTrade],
    train_config: &TrainConfig,
    config: &BootstrapConfig,
    point: Option<&ModelParams>,
    exec: Execution,
) -> Result<BootstrapResult> {
    config.validate()?;
    train_config.validate()?;
    if observed.is_empty() {
        return Err(Error::InvalidInput("bootstrap needs at least one observed price".into()));
    }
    if config.warm_start && point.is_none() {
        return Err(Error::Config("warm-started bootstrap needs a point estimate".into()));
    }
    let dims = graph.features().dims();
    let size = config.resample_size.unwrap_or(observed.len());

    let runs = exec.map(config.replicates, |b| -> Result<Option<ModelParams>> {
        let mut rng = stream(config.seed, Stream::BootstrapResample(b));
        let weights = resample_observed(observed.len(), size, &mut rng)?;
        let init = match (config.warm_start, point) {
            (true, Some(p)) => p.clone(),
            _ => {
                let mut rng = stream(config.seed, Stream::BootstrapInit(b));
                ModelParams::uniform(dims, train_config.init_range, &mut rng)
            }
        };
        match train_from(graph, observed, Some(&weights), train_config, init) {
            Ok(fit) => Ok(Some(fit.params)),
            Err(Error::Diverged { epoch, loss }) => {
                log::warn!("bootstrap replicate {b} diverged at epoch {epoch} (loss {loss}); skipped");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    });

    let mut draws = Vec::new();
    let mut replicate_ids = Vec::new();
    let mut skipped = Vec::new();
    for (b, run) in runs.into_iter().enumerate() {
        match run? {
            Some(p) => {
                replicate_ids.push(b);
                draws.push(p);
            }
            None => skipped.push(b),
        }
    }
    if skipped.len() as f64 > MAX_DIVERGED_FRACTION * config.replicates as f64 {
        return Err(Error::Numeric(format!(
            "{} of {} bootstrap replicates diverged",
            skipped.len(),
            config.replicates
        )));
    }
    let flat: Vec<Vec<f64>> = draws.iter().map(ModelParams::to_vec).collect();
    let summary = summarize_draws(&flat, config.alpha)?;
    Ok(BootstrapResult {
        names: ModelParams::names(dims),
        replicate_ids,
        draws,
        skipped,
        alpha: config.alpha,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_resample() {
        let mut rng = stream(1, Stream::Custom(0));
        assert_eq!(resample_observed(1, 7, &mut rng).unwrap(), vec![7.0]);
        assert!(resample_observed(0, 7, &mut rng).is_err());
    }

    #[test]
    fn weights_sum_to_size() {
        let mut rng = stream(2, Stream::Custom(0));
        for size in [1, 10, 68, 500] {
            let w = resample_observed(13, size, &mut rng).unwrap();
            assert_eq!(w.iter().sum::<f64>(), size as f64);
        }
    }

    #[test]
    fn identical_draws_give_zero_width() {
        let draws = vec![vec![1.5, -0.5]; 2];
        let s = summarize_draws(&draws, 0.05).unwrap();
        assert_eq!(s.ci_lower, s.ci_upper);
        assert_eq!(s.ci_lower, vec![1.5, -0.5]);
        assert_eq!(s.se, vec![0.0, 0.0]);
    }

    #[test]
    fn summary_moments() {
        let draws: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0].iter().map(|&x| vec![x]).collect();
        let s = summarize_draws(&draws, 0.5).unwrap();
        assert_eq!(s.mean, vec![2.5]);
        assert!((s.se[0] - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.ci_lower, vec![1.75]);
        assert_eq!(s.ci_upper, vec![3.25]);
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::default().validate().is_ok());
        let bad = BootstrapConfig {
            replicates: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = BootstrapConfig {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
