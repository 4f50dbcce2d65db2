//! Received-power and path-loss models for the three underwater link types,
//! and the inverse maps from an observed power or loss back to a range.

mod acoustic;
mod mi;
mod optical;
mod shadowing;

use serde::{Deserialize, Serialize};

pub use acoustic::{acoustic_invert_range, acoustic_path_loss, thorp_absorption, AcousticParams};
pub use mi::{mi_invert_range, mi_received_power, MiParams};
pub use optical::{
    optical_ber, optical_invert_range, optical_loss_factor, optical_photon_count,
    optical_range_from_photons, optical_received_power, optical_required_photons, OpticalParams,
};
pub use shadowing::{shadowed_power_sample, ShadowingModel};

/// Link technology used for a single-hop range measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technology {
    Optical,
    #[serde(rename = "mi")]
    MagneticInduction,
    Acoustic,
}

impl Technology {
    pub const ALL: [Technology; 3] = [
        Technology::Optical,
        Technology::MagneticInduction,
        Technology::Acoustic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Technology::Optical => "optical",
            Technology::MagneticInduction => "mi",
            Technology::Acoustic => "acoustic",
        }
    }
}

impl std::fmt::Display for Technology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Distance interval searched (or accepted) by a range inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub min: f64,
    pub max: f64,
}

impl Bracket {
    pub const fn new(min: f64, max: f64) -> Self {
        Bracket { min, max }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.min && r <= self.max
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.min, self.max)
    }
}

/// Watts to dB relative to 1 W.
pub fn watts_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

pub fn db_to_watts(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub(crate) fn check_distance(r: f64) -> crate::Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::NonPositiveDistance(r))
    }
}
