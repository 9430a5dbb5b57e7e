use serde::{Deserialize, Serialize};

use super::Dims;
use crate::estimator::ModelParams;
use crate::{Error, Result};

/// How dealers are linked inside each (asset, day) layer. Every ordered
/// dealer pair is an independent Bernoulli draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Topology {
    #[serde(rename = "er")]
    ErdosRenyi { p_edge: f64 },
    /// Dealers `0..n_core` form the core.
    CorePeriphery {
        n_core: usize,
        p_cc: f64,
        p_cp: f64,
        p_pp: f64,
    },
}

impl Topology {
    /// Inclusion probability of the ordered pair (seller, buyer).
    pub fn link_probability(&self, seller: usize, buyer: usize) -> f64 {
        match *self {
            Topology::ErdosRenyi { p_edge } => p_edge,
            Topology::CorePeriphery {
                n_core,
                p_cc,
                p_cp,
                p_pp,
            } => match (seller < n_core, buyer < n_core) {
                (true, true) => p_cc,
                (false, false) => p_pp,
                _ => p_cp,
            },
        }
    }

    /// Expected number of directed edges per layer.
    pub fn expected_edges_per_layer(&self, dealers: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..dealers {
            for j in 0..dealers {
                if i != j {
                    total += self.link_probability(i, j);
                }
            }
        }
        total
    }
}

/// Distribution of the log customer-value shock `z` in `u = exp(mu_u + z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CustomerShock {
    /// `z ~ N(0, sigma_u^2)`.
    Normal,
    /// `z ~ U[0, sigma_u)`.
    #[default]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation of the log holding-cost shock.
    pub sigma_c: f64,
    /// Standard deviation of the bargaining-power logit shock.
    pub sigma_pi: f64,
    /// Scale of the customer-value shock (see [`CustomerShock`]).
    pub sigma_u: f64,
    #[serde(default)]
    pub u_shock: CustomerShock,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_c: 0.1,
            sigma_pi: 0.1,
            sigma_u: 0.1,
            u_shock: CustomerShock::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDims {
    pub d_x: usize,
    pub d_y: usize,
    pub d_e: usize,
}

impl Default for FeatureDims {
    fn default() -> Self {
        Self {
            d_x: 1,
            d_y: 1,
            d_e: 1,
        }
    }
}

fn default_mu_u() -> f64 {
    5.0
}

/// Everything needed to draw one synthetic market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub dims: Dims,
    pub topology: Topology,
    #[serde(default)]
    pub features: FeatureDims,
    pub true_params: ModelParams,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_mu_u")]
    pub mu_u: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GenConfig {
    /// 10 dealers, 2 assets, 5 days, ER links with probability 0.7.
    pub fn dense(seed: u64) -> Self {
        Self::er(0.7, seed)
    }

    /// Same as [`GenConfig::dense`] with link probability 0.2.
    pub fn sparse(seed: u64) -> Self {
        Self::er(0.2, seed)
    }

    /// 4 core and 16 periphery dealers, 2 assets, 5 days.
    pub fn core_periphery(seed: u64) -> Self {
        Self {
            dims: Dims::new(20, 2, 5),
            topology: Topology::CorePeriphery {
                n_core: 4,
                p_cc: 0.9,
                p_cp: 0.7,
                p_pp: 0.01,
            },
            ..Self::er(0.7, seed)
        }
    }

    fn er(p_edge: f64, seed: u64) -> Self {
        Self {
            dims: Dims::new(10, 2, 5),
            topology: Topology::ErdosRenyi { p_edge },
            features: FeatureDims::default(),
            true_params: ModelParams::filled(1, 1, 1, 1.0),
            noise: NoiseConfig::default(),
            mu_u: 5.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        if d.dealers < 2 || d.assets == 0 || d.days == 0 {
            return Err(Error::Config(format!(
                "need at least 2 dealers and one asset and day, got {d:?}"
            )));
        }
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        match self.topology {
            Topology::ErdosRenyi { p_edge } => prob("p_edge", p_edge)?,
            Topology::CorePeriphery {
                n_core,
                p_cc,
                p_cp,
                p_pp,
            } => {
                prob("p_cc", p_cc)?;
                prob("p_cp", p_cp)?;
                prob("p_pp", p_pp)?;
                if n_core > d.dealers {
                    return Err(Error::Config(format!(
                        "n_core = {n_core} exceeds {} dealers",
                        d.dealers
                    )));
                }
            }
        }
        let f = self.features;
        if f.d_x == 0 || f.d_y == 0 || f.d_e == 0 {
            return Err(Error::Config(format!("feature dimensions must be positive, got {f:?}")));
        }
        self.true_params
            .check_dims((f.d_x, f.d_y, f.d_e))
            .map_err(|e| Error::Config(format!("true_params: {e}")))?;
        let n = &self.noise;
        for (name, s) in [("sigma_c", n.sigma_c), ("sigma_pi", n.sigma_pi), ("sigma_u", n.sigma_u)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("{name} = {s} must be nonnegative")));
            }
        }
        if !self.mu_u.is_finite() {
            return Err(Error::Config("mu_u must be finite".into()));
        }
        Ok(())
    }
}
