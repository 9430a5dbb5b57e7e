//! Least squares by Householder QR.
//!
//! Columns are processed left to right; a column whose component orthogonal
//! to the previously accepted columns is negligible is flagged as dependent.

use serde::{Deserialize, Serialize};

use crate::inference::MetricsReport;
use crate::{Error, Result};

/// Relative size below which a column counts as a combination of earlier ones.
const DEPENDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankPolicy {
    /// Fail, naming the dependent columns.
    #[default]
    Error,
    /// Pin dependent columns' coefficients to zero and log them.
    DropAndWarn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    /// One per column; zero for dropped columns.
    pub coefficients: Vec<f64>,
    pub dropped: Vec<String>,
    pub rank: usize,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Minimises `|y - A b|` for row-major `a` with `cols` columns.
pub fn lstsq(a: &[f64], cols: usize, y: &[f64], names: &[String], policy: RankPolicy) -> Result<LstsqSolution> {
    let rows = y.len();
    if rows == 0 {
        return Err(Error::InvalidInput("least squares needs at least one row".into()));
    }
    if cols == 0 || a.len() != rows * cols {
        return Err(Error::Dimension {
            what: "design matrix entries".into(),
            expected: rows * cols.max(1),
            got: a.len(),
        });
    }
    if names.len() != cols {
        return Err(Error::Dimension {
            what: "column names".into(),
            expected: cols,
            got: names.len(),
        });
    }
    if let Some(i) = a.iter().chain(y).position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite entry {i} in least-squares input")));
    }
    if policy == RankPolicy::Error && rows < cols {
        return Err(Error::InvalidInput(format!(
            "underdetermined least squares: {rows} rows for {cols} columns"
        )));
    }

    // Householder vectors (full length, zero above the pivot row) and the
    // upper triangle restricted to accepted columns.
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent: Vec<usize> = Vec::new();

    let apply = |h: &[f64], v: &mut [f64]| {
        let d: f64 = h.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        for (x, hv) in v.iter_mut().zip(h) {
            *x -= 2.0 * d * hv;
        }
    };

    for j in 0..cols {
        let mut col: Vec<f64> = (0..rows).map(|i| a[i * cols + j]).collect();
        let scale = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        for h in &reflectors {
            apply(h, &mut col);
        }
        let k = reflectors.len();
        let tail = if k < rows {
            col[k..].iter().map(|x| x * x).sum::<f64>().sqrt()
        } else {
            0.0
        };
        if scale == 0.0 || tail <= DEPENDENCE_TOL * scale {
            dependent.push(j);
            continue;
        }
        let alpha = if col[k] >= 0.0 { -tail } else { tail };
        let mut h = vec![0.0; rows];
        h[k] = col[k] - alpha;
        h[k + 1..].copy_from_slice(&col[k + 1..]);
        let hn = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        h.iter_mut().for_each(|x| *x /= hn);
        let mut r = col[..k].to_vec();
        r.push(alpha);
        reflectors.push(h);
        r_cols.push(r);
        kept.push(j);
    }

    let dropped: Vec<String> = dependent.iter().map(|&j| names[j].clone()).collect();
    if !dropped.is_empty() {
        match policy {
            RankPolicy::Error => return Err(Error::RankDeficient { columns: dropped }),
            RankPolicy::DropAndWarn => log::warn!("dropping dependent columns: {}", dropped.join(", ")),
        }
    }

    let mut qty = y.to_vec();
    for h in &reflectors {
        apply(h, &mut qty);
    }
    let rank = kept.len();
    let mut beta_kept = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = qty[i];
        for (t, bk) in beta_kept.iter().enumerate().skip(i + 1) {
            s -= r_cols[t][i] * bk;
        }
        beta_kept[i] = s / r_cols[i][i];
    }
    let mut coefficients = vec![0.0; cols];
    for (b, &j) in beta_kept.iter().zip(&kept) {
        coefficients[j] = *b;
    }
    let fitted: Vec<f64> = (0..rows)
        .map(|i| a[i * cols..(i + 1) * cols].iter().zip(&coefficients).map(|(x, b)| x * b).sum())
        .collect();
    let residuals = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(LstsqSolution {
        coefficients,
        dropped,
        rank,
        fitted,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub dropped: Vec<String>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub metrics: MetricsReport,
}

/// OLS with metrics; `k` in AIC/BIC is the number of design columns.
pub fn ols_fit(a: &[f64], cols: usize, y: &[f64], names: &[String], policy: RankPolicy) -> Result<RegressionResult> {
    let sol = lstsq(a, cols, y, names, policy)?;
    let metrics = MetricsReport::from_predictions(&sol.fitted, y, cols)?;
    Ok(RegressionResult {
        columns: names.to_vec(),
        coefficients: sol.coefficients,
        dropped: sol.dropped,
        fitted: sol.fitted,
        residuals: sol.residuals,
        metrics,
    })
}
