use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-normal shadowing on received power, averaged over repeated samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowingModel {
    /// Standard deviation of a single power sample (dB).
    pub std_dev_db: f64,
    /// Number of samples averaged into one estimate.
    pub samples: u32,
}

impl Default for ShadowingModel {
    fn default() -> Self {
        ShadowingModel {
            std_dev_db: 0.0,
            samples: 1,
        }
    }
}

impl ShadowingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.std_dev_db >= 0.0 && self.std_dev_db.is_finite()) {
            return Err(Error::config("shadowing.std_dev_db must be non-negative"));
        }
        if self.samples == 0 {
            return Err(Error::config("shadowing.samples must be at least 1"));
        }
        Ok(())
    }
}

/// Sample-mean estimate of a power level from `model.samples` shadowed draws.
pub fn shadowed_power_sample<R: Rng + ?Sized>(
    true_power_db: f64,
    model: &ShadowingModel,
    rng: &mut R,
) -> f64 {
    if model.std_dev_db == 0.0 {
        return true_power_db;
    }
    let normal = Normal::new(0.0, model.std_dev_db).expect("validated std dev");
    let n = model.samples.max(1);
    let sum: f64 = (0..n).map(|_| true_power_db + normal.sample(rng)).sum();
    sum / f64::from(n)
}
