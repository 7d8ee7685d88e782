//! Run configuration file: TOML sections mirroring the module config types.
//!
//! ```toml
//! [experiment]            # ExperimentConfig
//! seed = 0
//! [experiment.grids]      # HyperGrids
//! [experiment.glrr]       # GlrrConfig (solver settings)
//! [experiment.graph]      # GraphConfig
//! [synthetic]             # SyntheticSpec
//! [sweep]                 # SweepConfig
//! ```
//!
//! Every key is optional; omitted keys take the defaults shown by
//! [`RunConfig::reference`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SyntheticSpec;
use crate::error::{GlrrError, Result};
use crate::eval::{ExperimentConfig, SweepConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub synthetic: SyntheticSpec,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GlrrError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GlrrError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Fully populated default configuration.
    pub fn reference() -> String {
        RunConfig::default().to_toml()
    }

    /// Applies one seed to every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.experiment.seed = seed;
        self.synthetic.seed = seed;
        self
    }
}
