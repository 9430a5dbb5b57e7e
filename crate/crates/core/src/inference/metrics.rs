use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check_pair(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::Dimension {
            what: "predictions".into(),
            expected: actual.len(),
            got: pred.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one observation".into()));
    }
    Ok(())
}

pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum::<f64>() / actual.len() as f64)
}

pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / actual.len() as f64)
}

/// `1 - SS_res / SS_tot`.
pub fn r2(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::InvalidInput("r2 is undefined for a constant response".into()));
    }
    let ss_res: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Concentrated Gaussian log-likelihood `-n/2 (ln(2 pi s2) + 1)` with
/// `s2 = mean(residual^2)`.
pub fn gaussian_lnl(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::InvalidInput("log-likelihood needs at least one residual".into()));
    }
    let n = residuals.len() as f64;
    let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    if !(s2 > 0.0) || !s2.is_finite() {
        return Err(Error::Numeric(format!(
            "residual variance is {s2}; the Gaussian likelihood is degenerate"
        )));
    }
    Ok(-0.5 * n * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0))
}

pub fn aic(k: usize, lnl: f64) -> f64 {
    2.0 * k as f64 - 2.0 * lnl
}

pub fn bic(n: usize, k: usize, lnl: f64) -> f64 {
    (n as f64).ln() * k as f64 - 2.0 * lnl
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub r2: f64,
    pub mae: f64,
    pub mse: f64,
    pub n_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
}

impl MetricsReport {
    /// AIC and BIC are `-inf` for an exact fit, the limit of the Gaussian
    /// likelihood as the residual variance goes to zero.
    pub fn from_predictions(pred: &[f64], actual: &[f64], n_params: usize) -> Result<Self> {
        check_pair(pred, actual)?;
        let residuals: Vec<f64> = actual.iter().zip(pred).map(|(a, p)| a - p).collect();
        let lnl = if residuals.iter().all(|&r| r == 0.0) {
            f64::INFINITY
        } else {
            gaussian_lnl(&residuals)?
        };
        let n = actual.len();
        Ok(Self {
            r2: r2(pred, actual)?,
            mae: mae(pred, actual)?,
            mse: mse(pred, actual)?,
            n_params,
            aic: aic(n_params, lnl),
            bic: bic(n, n_params, lnl),
            n_obs: n,
        })
    }
}

/// Linear-interpolation percentile (type 7) of ascending `sorted`.
pub fn percentile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InvalidInput("percentile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("percentile level {q} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}
