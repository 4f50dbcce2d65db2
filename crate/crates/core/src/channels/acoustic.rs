use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use super::{check_distance, Bracket};
use crate::error::{Error, Result};
use crate::special_fn::lambert_w0_exp;

/// Acoustic link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcousticParams {
    /// Carrier frequency (kHz).
    pub frequency_khz: f64,
    /// Source level (dB); received level is this minus the path loss.
    pub source_level_db: f64,
    pub bracket: Bracket,
}

impl Default for AcousticParams {
    fn default() -> Self {
        AcousticParams {
            frequency_khz: 10.0,
            source_level_db: 150.0,
            bracket: Bracket::new(0.1, 20_000.0),
        }
    }
}

impl AcousticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_khz > 0.0 && self.frequency_khz.is_finite()) {
            return Err(Error::config("acoustic.frequency_khz must be positive"));
        }
        if !(self.bracket.min > 0.0 && self.bracket.max > self.bracket.min) {
            return Err(Error::config("acoustic.bracket must satisfy 0 < min < max"));
        }
        Ok(())
    }

    /// Absorption in dB per metre.
    fn absorption_per_m(&self) -> f64 {
        1e-3 * thorp_absorption(self.frequency_khz)
    }
}

/// Thorp absorption coefficient in dB/km for a frequency in kHz.
pub fn thorp_absorption(f_khz: f64) -> f64 {
    let f2 = f_khz * f_khz;
    0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2)
}

/// Spherical spreading plus Thorp absorption, in dB, for a range in metres.
pub fn acoustic_path_loss(params: &AcousticParams, r: f64) -> Result<f64> {
    check_distance(r)?;
    Ok(20.0 * r.log10() + params.absorption_per_m() * r)
}

/// Range (m) whose path loss equals `loss_db`.
///
/// With `k = 20 / ln 10` and absorption `a` dB/m the loss law
/// `L = k ln r + a r` inverts to `r = (k / a) W0((a / k) exp(L / k))`.
/// The Lambert argument is passed in log form so large losses cannot overflow.
pub fn acoustic_invert_range(params: &AcousticParams, loss_db: f64) -> Result<f64> {
    if !loss_db.is_finite() {
        return Err(Error::Domain {
            function: "acoustic_invert_range",
            value: loss_db,
            reason: "loss must be finite",
        });
    }
    let k = 20.0 / LN_10;
    let a = params.absorption_per_m();
    let r = if a > 0.0 {
        let w = lambert_w0_exp((a / k).ln() + loss_db / k)?;
        k / a * w
    } else {
        10f64.powf(loss_db / 20.0)
    };
    if !params.bracket.contains(r) {
        return Err(Error::OutOfRange {
            quantity: "acoustic range",
            value: r,
            min: params.bracket.min,
            max: params.bracket.max,
        });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thorp_values() {
        assert_eq!(thorp_absorption(0.0), 0.0);
        // 0.11*100/101 + 44*100/4200
        let expect = 11.0 / 101.0 + 4400.0 / 4200.0;
        assert!((thorp_absorption(10.0) - expect).abs() < 1e-15);
        assert!((thorp_absorption(10.0) - 1.1565).abs() < 1e-4);
        assert!((thorp_absorption(1e9) - 44.11).abs() < 1e-6);
    }

    #[test]
    fn path_loss_values() {
        let p = AcousticParams::default();
        let phi = thorp_absorption(10.0);
        assert!((acoustic_path_loss(&p, 1.0).unwrap() - 1e-3 * phi).abs() < 1e-15);
        let l100 = acoustic_path_loss(&p, 100.0).unwrap();
        assert!((l100 - (40.0 + 0.1 * phi)).abs() < 1e-12);
        assert!((l100 - 40.1157).abs() < 1e-4);
        assert!(acoustic_path_loss(&p, 0.0).is_err());
    }

    #[test]
    fn increasing_on_dense_grid() {
        let p = AcousticParams::default();
        let mut prev = f64::NEG_INFINITY;
        let mut r = 0.1;
        while r <= 10_000.0 {
            let l = acoustic_path_loss(&p, r).unwrap();
            assert!(l > prev);
            prev = l;
            r *= 1.01;
        }
    }

    #[test]
    fn round_trips() {
        let p = AcousticParams::default();
        let l50 = acoustic_path_loss(&p, 50.0).unwrap();
        assert!((acoustic_invert_range(&p, l50).unwrap() - 50.0).abs() < 1e-4);
        let l1k = acoustic_path_loss(&p, 1000.0).unwrap();
        let r = acoustic_invert_range(&p, l1k).unwrap();
        assert!((r - 1000.0).abs() < 1e-3);
        assert!((acoustic_path_loss(&p, r).unwrap() - l1k).abs() < 1e-6);
        assert!(acoustic_invert_range(&p, l1k + 1.0).unwrap() > r);
    }

    #[test]
    fn rounded_closed_form_misses_the_loss_law() {
        // r = 2e4 W0(1.15e-4 φ e^{0.11 L}) / (2.3 φ), with the rounded constants
        let p = AcousticParams::default();
        let phi = thorp_absorption(p.frequency_khz);
        let loss = acoustic_path_loss(&p, 1000.0).unwrap();
        let w = crate::special_fn::lambert_w0(1.15e-4 * phi * (0.11 * loss).exp()).unwrap();
        let r_rounded = 2e4 * w / (2.3 * phi);
        let miss = (acoustic_path_loss(&p, r_rounded).unwrap() - loss).abs();
        assert!(miss > 1e-6, "rounded form unexpectedly exact: {miss}");
    }

    #[test]
    fn zero_frequency_is_pure_spreading() {
        let p = AcousticParams {
            frequency_khz: 0.0,
            ..AcousticParams::default()
        };
        assert!((acoustic_invert_range(&p, 40.0).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn outside_bracket() {
        let p = AcousticParams::default();
        assert!(matches!(
            acoustic_invert_range(&p, 500.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(acoustic_invert_range(&p, f64::NAN).is_err());
    }
}
