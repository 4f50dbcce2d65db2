//! Localization error and the communication-energy trade-off.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean over nodes of the Euclidean position error (m).
///
/// This is the mean of per-node error norms, not the root of the mean
/// squared error.
pub fn rmse(true_pos: &DMatrix<f64>, est_pos: &DMatrix<f64>) -> Result<f64> {
    check_shapes(true_pos, est_pos)?;
    let k = true_pos.nrows();
    if k == 0 {
        return Ok(0.0);
    }
    Ok(error_norms(true_pos, est_pos).sum::<f64>() / k as f64)
}

fn error_norms<'a>(t: &'a DMatrix<f64>, e: &'a DMatrix<f64>) -> impl Iterator<Item = f64> + 'a {
    (0..t.nrows()).map(move |i| (t.row(i) - e.row(i)).norm())
}

fn check_shapes(t: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<()> {
    if t.shape() != e.shape() || t.ncols() != 3 {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x3 for both", t.nrows()),
            actual: format!("{}x{} and {}x{}", t.nrows(), t.ncols(), e.nrows(), e.ncols()),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    /// Energy per transmitted bit (J).
    pub e_bit: f64,
    /// Per-node circuitry energy (J).
    pub e_fundamental: f64,
    /// Carrier wavelength (m).
    pub wavelength: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            e_bit: 1e-6,
            e_fundamental: 0.0,
            wavelength: 1.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_bit > 0.0 && self.wavelength > 0.0 && self.e_fundamental >= 0.0) {
            return Err(Error::config(
                "energy: e_bit and wavelength must be positive, e_fundamental non-negative",
            ));
        }
        Ok(())
    }
}

/// `E_B (4 pi r / lambda)^2`.
pub fn node_tx_energy(p: &EnergyParams, r: f64) -> f64 {
    p.e_bit * (4.0 * std::f64::consts::PI * r / p.wavelength).powi(2)
}

/// Sum of [`node_tx_energy`] over all nodes.
pub fn transmission_energy_sum(p: &EnergyParams, ranges: &[f64]) -> f64 {
    ranges.iter().map(|&r| node_tx_energy(p, r)).sum()
}

/// `sum E_F + K * sum E_R` over `K = ranges.len()` nodes.
pub fn total_energy(p: &EnergyParams, ranges: &[f64]) -> f64 {
    let k = ranges.len() as f64;
    k * p.e_fundamental + k * transmission_energy_sum(p, ranges)
}

/// Energy-error product
/// `E_B (4 pi / lambda)^2 * sum R_m^2 * sum_m ||e_m|| / K`.
pub fn energy_error_product(
    p: &EnergyParams,
    ranges: &[f64],
    true_pos: &DMatrix<f64>,
    est_pos: &DMatrix<f64>,
) -> Result<f64> {
    check_shapes(true_pos, est_pos)?;
    let k = true_pos.nrows();
    if ranges.len() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{k} ranges"),
            actual: ranges.len().to_string(),
        });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let geometric = p.e_bit * (4.0 * std::f64::consts::PI / p.wavelength).powi(2);
    let r2: f64 = ranges.iter().map(|r| r * r).sum();
    let err: f64 = error_norms(true_pos, est_pos).sum();
    Ok(geometric * r2 * err / k as f64)
}
