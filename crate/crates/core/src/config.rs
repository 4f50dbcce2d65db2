//! TOML experiment files: a scenario, a sweep and the energy model.
//!
//! Every key is optional and falls back to the built-in default:
//!
//! ```toml
//! [scenario]
//! n_anchors = 4
//! n_sensors = 96
//! n_relays = 4
//! noise_variance = 0.01
//! transmission_range = 175.0
//! seed = 2021
//! region = { min = [0.0, 0.0, 0.0], max = [100.0, 100.0, 100.0] }
//!
//! [scenario.channels.acoustic]
//! frequency_khz = 10.0
//!
//! [sweep]
//! axis = "noise_variance"      # noise_variance | n_nodes | n_anchors | tx_range
//! values = [0.0, 0.25, 0.5, 0.75, 1.0]
//! trials = 20
//! methods = ["proposed", "wcl"]
//!
//! [energy]
//! e_bit = 1e-6
//! e_fundamental = 0.0
//! wavelength = 1.0
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::EnergyParams;
use crate::network::ScenarioConfig;
use crate::sweep::{Method, SweepAxis, SweepSpec};

/// Monte-Carlo repetitions per sweep point when a file does not say.
pub const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axis: SweepAxis::NoiseVariance,
            values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            trials: DEFAULT_TRIALS,
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub sweep: SweepSection,
    pub energy: EnergyParams,
}

impl ExperimentConfig {
    /// Parses TOML text; `origin` labels errors.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.energy.validate()?;
        self.sweep_spec().validate()
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            axis: self.sweep.axis,
            values: self.sweep.values.clone(),
            trials: self.sweep.trials,
            base: self.scenario.clone(),
            methods: self.sweep.methods.clone(),
            energy: self.energy,
        }
    }
}
