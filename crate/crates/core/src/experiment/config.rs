use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimator::TrainConfig;
use crate::inference::BootstrapConfig;
use crate::market::GenConfig;
use crate::{Error, Result};

/// The three embedded market designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Dense,
    Sparse,
    CorePeriphery,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Dense, Preset::Sparse, Preset::CorePeriphery];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Dense => "dense",
            Preset::Sparse => "sparse",
            Preset::CorePeriphery => "core-periphery",
        }
    }

    pub fn gen_config(self, seed: u64) -> GenConfig {
        match self {
            Preset::Dense => GenConfig::dense(seed),
            Preset::Sparse => GenConfig::sparse(seed),
            Preset::CorePeriphery => GenConfig::core_periphery(seed),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}` (expected dense, sparse or core-periphery)")))
    }
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_data_sweeps() -> usize {
    10
}

/// One end-to-end run. `seed` is the single source of randomness: it
/// replaces the seeds of the generation, training and bootstrap sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub gen: GenConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    /// Write the figure-data CSVs (latents, price scatter, histograms).
    #[serde(default = "default_true")]
    pub emit_plots: bool,
    /// Value-iteration sweeps used to generate observed prices.
    #[serde(default = "default_data_sweeps")]
    pub data_sweeps: usize,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset, seed: u64) -> Self {
        let mut cfg = Self {
            seed,
            gen: preset.gen_config(seed),
            train: TrainConfig::default(),
            bootstrap: BootstrapConfig::default(),
            outputs: default_outputs(),
            emit_plots: true,
            data_sweeps: default_data_sweeps(),
        };
        cfg.set_seed(seed);
        cfg
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.gen.seed = seed;
        self.train.seed = seed;
        self.bootstrap.seed = seed;
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))?;
        cfg.set_seed(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        self.train.validate()?;
        self.bootstrap.validate()?;
        if self.data_sweeps == 0 {
            return Err(Error::Config("data_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}
