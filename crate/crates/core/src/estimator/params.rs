use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Structural coefficients: holding cost on asset features (`beta_x`) and
/// dealer features (`beta_y`), bargaining power on relationship features
/// (`eta`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta_x: Vec<f64>,
    pub beta_y: Vec<f64>,
    pub eta: Vec<f64>,
}

impl ModelParams {
    pub fn new(beta_x: Vec<f64>, beta_y: Vec<f64>, eta: Vec<f64>) -> Self {
        Self { beta_x, beta_y, eta }
    }

    pub fn zeros(d_x: usize, d_y: usize, d_e: usize) -> Self {
        Self::new(vec![0.0; d_x], vec![0.0; d_y], vec![0.0; d_e])
    }

    pub fn filled(d_x: usize, d_y: usize, d_e: usize, value: f64) -> Self {
        Self::new(vec![value; d_x], vec![value; d_y], vec![value; d_e])
    }

    /// Uniform draw on `[-half_width, half_width]` per coordinate.
    pub fn uniform<R: Rng + ?Sized>(dims: (usize, usize, usize), half_width: f64, rng: &mut R) -> Self {
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.random_range(-half_width..=half_width))
                .collect()
        };
        let beta_x = draw(dims.0);
        let beta_y = draw(dims.1);
        let eta = draw(dims.2);
        Self::new(beta_x, beta_y, eta)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.beta_x.len(), self.beta_y.len(), self.eta.len())
    }

    pub fn len(&self) -> usize {
        self.beta_x.len() + self.beta_y.len() + self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates in `beta_x, beta_y, eta` order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.beta_x);
        out.extend_from_slice(&self.beta_y);
        out.extend_from_slice(&self.eta);
        out
    }

    pub fn from_slice(dims: (usize, usize, usize), flat: &[f64]) -> Result<Self> {
        let n = dims.0 + dims.1 + dims.2;
        if flat.len() != n {
            return Err(Error::Dimension {
                what: "flattened parameters".into(),
                expected: n,
                got: flat.len(),
            });
        }
        Ok(Self::new(
            flat[..dims.0].to_vec(),
            flat[dims.0..dims.0 + dims.1].to_vec(),
            flat[dims.0 + dims.1..].to_vec(),
        ))
    }

    /// Names matching [`ModelParams::to_vec`]; unit dimensions drop the index.
    pub fn names(dims: (usize, usize, usize)) -> Vec<String> {
        let mut out = Vec::new();
        for (base, n) in [("beta_x", dims.0), ("beta_y", dims.1), ("eta", dims.2)] {
            if n == 1 {
                out.push(base.to_string());
            } else {
                out.extend((1..=n).map(|i| format!("{base}_{i}")));
            }
        }
        out
    }

    pub fn squared_norm(&self) -> f64 {
        self.to_vec().iter().map(|v| v * v).sum()
    }

    pub fn check_dims(&self, expected: (usize, usize, usize)) -> Result<()> {
        for (what, got, want) in [
            ("beta_x", self.beta_x.len(), expected.0),
            ("beta_y", self.beta_y.len(), expected.1),
            ("eta", self.eta.len(), expected.2),
        ] {
            if got != want {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected: want,
                    got,
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
