use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::SchemeConfig;
use crate::optics::OpticsConfig;
use crate::scenegen::{Category, SceneSpec};

/// Experiment family; each has its own defaults under the user file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Single simulate/invert runs.
    Single,
    Ablation,
    Luminance,
    Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub categories: Vec<Category>,
    /// Images generated per category; the protocols evaluate its test split.
    pub corpus_size: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            categories: Category::ALL.to_vec(),
            corpus_size: 200,
            size: 64,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::config("scene.categories", "at least one category is required"));
        }
        if self.corpus_size < 10 {
            return Err(Error::config("scene.corpus_size", "must be ≥ 10 to form a split"));
        }
        SceneSpec::square(Category::Chart, self.size, 0)
            .validate()
            .map_err(|e| Error::config("scene.size", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Triptychs drawn per condition in `grid.png`.
    pub grid_samples: usize,
    /// Gap between grid tiles in pixels.
    pub grid_gap: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            grid_samples: 1,
            grid_gap: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub optics: OpticsConfig,
    pub scheme: SchemeConfig,
    pub scene: SceneConfig,
    pub report: ReportConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::defaults_for(Protocol::Single)
    }
}

impl ExperimentConfig {
    pub fn defaults_for(protocol: Protocol) -> Self {
        let mut cfg = ExperimentConfig {
            optics: OpticsConfig::default(),
            scheme: SchemeConfig::default(),
            scene: SceneConfig::default(),
            report: ReportConfig::default(),
        };
        match protocol {
            Protocol::Single => {}
            Protocol::Ablation => {
                cfg.scheme.max_iters = 500;
            }
            Protocol::Luminance => {
                cfg.optics.noise_sigma = 0.005;
                cfg.scheme.psi_reg = 1e-2;
                cfg.scheme.max_iters = 5;
                cfg.scene.corpus_size = 50;
            }
            Protocol::Geometry => {
                cfg.optics.psf_sigma = 0.25;
                cfg.scheme.psi_reg = 1e-8;
                cfg.scheme.max_iters = 100;
                cfg.scene.corpus_size = 40;
            }
        }
        cfg
    }

    /// Protocol defaults overridden key-by-key by the TOML text.
    pub fn from_toml(text: &str, protocol: Protocol) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        let mut base = toml::Table::try_from(Self::defaults_for(protocol))
            .map_err(|e| Error::Format(format!("serializing defaults: {e}")))?;
        merge(&mut base, user);
        let cfg: ExperimentConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, protocol: Protocol) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?, protocol)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("serializing config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.optics.validate()?;
        self.scheme.validate()?;
        self.scene.validate()
    }
}

fn merge(base: &mut toml::Table, user: toml::Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
