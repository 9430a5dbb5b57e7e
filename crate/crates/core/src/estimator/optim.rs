use serde::{Deserialize, Serialize};

use super::backward::Gradients;
use super::ModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Optimizer {
    GradientDescent,
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

impl Optimizer {
    pub fn validate(&self) -> Result<()> {
        if let Optimizer::Adam { beta1, beta2, eps } = *self {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::Config(format!(
                    "adam needs 0 <= beta1, beta2 < 1 and eps > 0, got {beta1}, {beta2}, {eps}"
                )));
            }
        }
        Ok(())
    }
}

/// Moment estimates carried between steps. Unused by plain descent.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl OptimizerState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One update of `params` against `grads` with learning rate `lr`.
pub fn step(
    params: &ModelParams,
    grads: &Gradients,
    state: &mut OptimizerState,
    optimizer: &Optimizer,
    lr: f64,
) -> Result<ModelParams> {
    let mut theta = params.to_vec();
    let g = grads.to_vec();
    if g.len() != theta.len() || state.m.len() != theta.len() {
        return Err(Error::Dimension {
            what: "gradient".into(),
            expected: theta.len(),
            got: g.len(),
        });
    }
    state.t += 1;
    match *optimizer {
        Optimizer::GradientDescent => {
            for (t, g) in theta.iter_mut().zip(&g) {
                *t -= lr * g;
            }
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            let bc1 = 1.0 - beta1.powi(state.t as i32);
            let bc2 = 1.0 - beta2.powi(state.t as i32);
            for k in 0..theta.len() {
                state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g[k];
                state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = state.m[k] / bc1;
                let v_hat = state.v[k] / bc2;
                theta[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
    ModelParams::from_slice(params.dims(), &theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grads(g: f64) -> Gradients {
        Gradients {
            d_beta_x: vec![g],
            d_beta_y: vec![],
            d_eta: vec![],
        }
    }

    fn one(theta: f64) -> ModelParams {
        ModelParams::new(vec![theta], vec![], vec![])
    }

    #[test]
    fn plain_step() {
        let mut s = OptimizerState::new(1);
        let p = step(&one(1.0), &grads(0.5), &mut s, &Optimizer::GradientDescent, 0.01).unwrap();
        assert!((p.beta_x[0] - 0.995).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        for opt in [Optimizer::GradientDescent, Optimizer::default()] {
            let mut s = OptimizerState::new(1);
            let mut p = one(0.3);
            for _ in 0..3 {
                p = step(&p, &grads(0.0), &mut s, &opt, 0.01).unwrap();
            }
            assert_eq!(p.beta_x[0], 0.3);
        }
    }

    #[test]
    fn first_adam_step_is_unit_scaled() {
        // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
        let mut s = OptimizerState::new(1);
        let p = step(&one(0.0), &grads(1.0), &mut s, &Optimizer::default(), 0.01).unwrap();
        assert!((p.beta_x[0] + 0.01 / (1.0 + 1e-8)).abs() < 1e-15);
        // Scale free: a huge gradient gives the same first step.
        let mut s = OptimizerState::new(1);
        let q = step(&one(0.0), &grads(1e6), &mut s, &Optimizer::default(), 0.01).unwrap();
        assert!((q.beta_x[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_settings() {
        let bad = Optimizer::Adam {
            beta1: 1.0,
            beta2: 0.999,
            eps: 1e-8,
        };
        assert!(bad.validate().is_err());
        let mut s = OptimizerState::new(2);
        assert!(step(&one(0.0), &grads(1.0), &mut s, &Optimizer::default(), 0.01).is_err());
    }
}
