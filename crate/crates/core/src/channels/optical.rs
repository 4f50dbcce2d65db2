use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_distance, Bracket};
use crate::error::{Error, Result};
use crate::special_fn::{erfc, erfc_inv, lambert_w0};

/// Line-of-sight optical link and photon-counting receiver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticalParams {
    /// Scattering coefficient (1/m).
    pub scattering: f64,
    /// Absorption coefficient (1/m).
    pub absorption: f64,
    pub eta_tx: f64,
    pub eta_rx: f64,
    /// Receiver aperture area (m^2).
    pub aperture_area: f64,
    /// Angle between the transmitter trajectory and the receiver normal (rad).
    pub trajectory_angle: f64,
    /// Beam divergence angle (rad).
    pub divergence_angle: f64,
    /// Transmit power (W).
    pub tx_power: f64,
    /// Photon counting interval (s).
    pub slot_time: f64,
    /// Data rate (bit/s).
    pub data_rate: f64,
    pub planck: f64,
    /// Speed of light in water (m/s).
    pub light_speed: f64,
    /// Carrier wavelength (m).
    pub wavelength: f64,
    /// Dark-count noise (photons).
    pub dark_count: f64,
    /// Background-light noise (photons).
    pub background_count: f64,
    /// Target bit-error rate, in (0, 0.5).
    pub ber_target: f64,
    pub bracket: Bracket,
}

impl Default for OpticalParams {
    fn default() -> Self {
        // clear-ocean coefficients at 532 nm
        OpticalParams {
            scattering: 0.037,
            absorption: 0.114,
            eta_tx: 0.9,
            eta_rx: 0.9,
            aperture_area: 0.01,
            trajectory_angle: 0.0,
            divergence_angle: PI / 6.0,
            tx_power: 1.0,
            slot_time: 1.0,
            data_rate: 1e6,
            planck: 6.626_070_15e-34,
            light_speed: 2.25e8,
            wavelength: 532e-9,
            dark_count: 1.0,
            background_count: 1.0,
            ber_target: 1e-6,
            bracket: Bracket::new(1e-3, 200.0),
        }
    }
}

impl OpticalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation() > 0.0) {
            return Err(Error::config("optical scattering + absorption must be positive"));
        }
        if !(self.trajectory_angle.cos() > 0.0) {
            return Err(Error::config("optical trajectory_angle must have cos > 0"));
        }
        if !(self.divergence_angle > 0.0 && self.divergence_angle < PI) {
            return Err(Error::config("optical divergence_angle must lie in (0, pi)"));
        }
        for (name, v) in [("eta_tx", self.eta_tx), ("eta_rx", self.eta_rx)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!("optical.{name} must lie in (0, 1]")));
            }
        }
        for (name, v) in [
            ("aperture_area", self.aperture_area),
            ("tx_power", self.tx_power),
            ("slot_time", self.slot_time),
            ("data_rate", self.data_rate),
            ("planck", self.planck),
            ("light_speed", self.light_speed),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("optical.{name} must be positive")));
            }
        }
        if self.dark_count < 0.0 || self.background_count < 0.0 {
            return Err(Error::config("optical noise counts must be non-negative"));
        }
        if !(self.ber_target > 0.0 && self.ber_target < 0.5) {
            return Err(Error::config("optical.ber_target must lie in (0, 0.5)"));
        }
        if !(self.bracket.min > 0.0 && self.bracket.max > self.bracket.min) {
            return Err(Error::config("optical.bracket must satisfy 0 < min < max"));
        }
        Ok(())
    }

    /// Total loss coefficient: scattering plus absorption (1/m).
    pub fn attenuation(&self) -> f64 {
        self.scattering + self.absorption
    }

    fn noise_floor(&self) -> f64 {
        self.dark_count + self.background_count
    }

    /// Received power times `r^2 / L(r)`: the geometry-only part of the link budget.
    fn geometric_gain(&self) -> f64 {
        self.tx_power * self.eta_tx * self.eta_rx * self.aperture_area * self.trajectory_angle.cos()
            / (2.0 * PI * (1.0 - self.divergence_angle.cos()))
    }

    /// Photons per watt of received power.
    fn photons_per_watt(&self) -> f64 {
        self.eta_rx * self.wavelength
            / (self.slot_time * self.data_rate * self.planck * self.light_speed)
    }
}

/// Fraction of optical power surviving `r` metres of water, `exp(-l r)`.
pub fn optical_loss_factor(params: &OpticalParams, r: f64) -> f64 {
    (-params.attenuation() * r).exp()
}

/// LOS received power (W) at range `r`.
pub fn optical_received_power(params: &OpticalParams, r: f64) -> Result<f64> {
    check_distance(r)?;
    let denom = 1.0 - params.divergence_angle.cos();
    if !(denom > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "optical divergence angle {} gives a zero beam solid angle",
            params.divergence_angle
        )));
    }
    if !(params.trajectory_angle.cos() > 0.0) {
        return Err(Error::DegenerateGeometry(
            "optical receiver faces away from the transmitter".into(),
        ));
    }
    Ok(params.geometric_gain() * optical_loss_factor(params, r) / (r * r))
}

/// Photons counted in one slot for received power `p_r` (W).
pub fn optical_photon_count(params: &OpticalParams, p_r: f64) -> f64 {
    p_r * params.photons_per_watt()
}

/// Bit-error rate of on/off keying when `d_n` signal photons arrive.
pub fn optical_ber(params: &OpticalParams, d_n: f64) -> f64 {
    let d0 = params.noise_floor();
    let d1 = d0 + d_n;
    0.5 * erfc((params.slot_time / 2.0).sqrt() * (d1.sqrt() - d0.sqrt()))
}

/// Signal photons needed to reach `params.ber_target`; inverse of [`optical_ber`].
pub fn optical_required_photons(params: &OpticalParams) -> Result<f64> {
    let g = params.ber_target;
    if !(g > 0.0 && g <= 0.5) {
        return Err(Error::Domain {
            function: "optical_required_photons",
            value: g,
            reason: "BER target must lie in (0, 0.5]",
        });
    }
    let d0 = params.noise_floor();
    let root = d0.sqrt() + (2.0 / params.slot_time).sqrt() * erfc_inv(2.0 * g)?;
    Ok((root * root - d0).max(0.0))
}

/// Range (m) at which the received photon count equals `photons`.
///
/// Photon count falls as `C exp(-l r) / r^2`, so
/// `r = (2 / l) W0((l / 2) sqrt(C / photons))`.
pub fn optical_range_from_photons(params: &OpticalParams, photons: f64) -> Result<f64> {
    if !(photons > 0.0) {
        return Err(Error::Domain {
            function: "optical_range_from_photons",
            value: photons,
            reason: "photon count must be positive; the link would reach infinitely far",
        });
    }
    // validates the beam geometry
    optical_received_power(params, 1.0)?;
    let c = optical_photon_count(params, params.geometric_gain());
    let l = params.attenuation();
    let w = lambert_w0(0.5 * l * (c / photons).sqrt())?;
    let r = 2.0 / l * w;
    if !params.bracket.contains(r) {
        return Err(Error::OutOfRange {
            quantity: "optical range",
            value: r,
            min: params.bracket.min,
            max: params.bracket.max,
        });
    }
    Ok(r)
}

/// Longest range that still meets `params.ber_target`.
pub fn optical_invert_range(params: &OpticalParams) -> Result<f64> {
    let d_n = optical_required_photons(params)?;
    optical_range_from_photons(params, d_n)
}
