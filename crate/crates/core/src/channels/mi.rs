use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_distance, Bracket};
use crate::error::{Error, Result};

/// Coil-pair and medium parameters for a magnetic-induction link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiParams {
    /// Angular carrier frequency (rad/s).
    pub omega: f64,
    /// Permeability of water (H/m).
    pub mu: f64,
    pub turns_tx: u32,
    pub turns_rx: u32,
    /// Coil diameters (m).
    pub coil_diameter_tx: f64,
    pub coil_diameter_rx: f64,
    /// Angle between the transmit and receive coil axes (rad).
    pub coil_angle: f64,
    /// Impedance of a unit-length loop (ohm/m).
    pub loop_impedance_tx: f64,
    pub loop_impedance_rx: f64,
    /// Water conductivity (S/m): 0.01 for clean water, 4 for seawater.
    pub conductivity: f64,
    /// Transmit power (W).
    pub tx_power: f64,
    pub bracket: Bracket,
}

impl Default for MiParams {
    fn default() -> Self {
        MiParams {
            omega: 2.0 * PI * 500.0,
            mu: 4.0 * PI * 1e-7,
            turns_tx: 20,
            turns_rx: 20,
            coil_diameter_tx: 0.15,
            coil_diameter_rx: 0.15,
            coil_angle: PI / 2.0,
            loop_impedance_tx: 0.1,
            loop_impedance_rx: 0.1,
            conductivity: 4.0,
            tx_power: 1.0,
            bracket: Bracket::new(1e-3, 100.0),
        }
    }
}

impl MiParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega", self.omega),
            ("mu", self.mu),
            ("coil_diameter_tx", self.coil_diameter_tx),
            ("coil_diameter_rx", self.coil_diameter_rx),
            ("loop_impedance_tx", self.loop_impedance_tx),
            ("loop_impedance_rx", self.loop_impedance_rx),
            ("tx_power", self.tx_power),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("mi.{name} must be positive, got {v}")));
            }
        }
        if self.turns_tx == 0 || self.turns_rx == 0 {
            return Err(Error::config("mi coil turn counts must be positive"));
        }
        if !(self.conductivity >= 0.0) {
            return Err(Error::config("mi.conductivity must be non-negative"));
        }
        if !(self.bracket.min > 0.0 && self.bracket.max > self.bracket.min) {
            return Err(Error::config("mi.bracket must satisfy 0 < min < max"));
        }
        Ok(())
    }

    /// Skin depth `sqrt(2 / (omega mu sigma))` in metres; infinite for `sigma = 0`.
    pub fn skin_depth(&self) -> f64 {
        if self.conductivity == 0.0 {
            f64::INFINITY
        } else {
            (2.0 / (self.omega * self.mu * self.conductivity)).sqrt()
        }
    }

    /// Field attenuation `G = exp(-r / skin_depth)` from conduction losses.
    pub fn skin_depth_factor(&self, r: f64) -> f64 {
        (-r / self.skin_depth()).exp()
    }

    /// Received power with `G = 1`: the coupling law alone.
    pub fn coupling_power(&self, r: f64) -> f64 {
        let sin = self.coil_angle.sin();
        let d0 = (self.loop_impedance_tx * self.loop_impedance_rx).sqrt();
        self.omega
            * self.mu
            * self.tx_power
            * f64::from(self.turns_tx)
            * f64::from(self.turns_rx)
            * self.coil_diameter_tx.powi(3)
            * self.coil_diameter_rx.powi(3)
            * sin
            * sin
            / (16.0 * d0 * r * r)
    }

    fn log_power(&self, r: f64) -> f64 {
        self.coupling_power(r).ln() - 2.0 * r / self.skin_depth()
    }
}

/// Received MI power (W) at range `r`: the coil coupling law scaled by `G^2`.
pub fn mi_received_power(params: &MiParams, r: f64) -> Result<f64> {
    check_distance(r)?;
    let g = params.skin_depth_factor(r);
    Ok(params.coupling_power(r) * g * g)
}

/// Range whose forward MI power equals `observed_power`.
///
/// Bisection in log-power over `params.bracket`; the forward model is strictly
/// decreasing so the root is unique.
pub fn mi_invert_range(params: &MiParams, observed_power: f64) -> Result<f64> {
    let Bracket { min, max } = params.bracket;
    let hi_power = mi_received_power(params, min)?;
    let lo_power = mi_received_power(params, max)?;
    if !(observed_power > 0.0) || !(hi_power > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "MI received power",
            value: observed_power,
            min: lo_power,
            max: hi_power,
        });
    }
    if observed_power > hi_power || observed_power < lo_power {
        return Err(Error::OutOfRange {
            quantity: "MI received power",
            value: observed_power,
            min: lo_power,
            max: hi_power,
        });
    }

    let target = observed_power.ln();
    let (mut lo, mut hi) = (min, max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if params.log_power(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
