//! Scalar special functions used by the ranging inversions.
//!
//! Only the real principal branch `W0` of the Lambert W function is provided,
//! together with an inverse complementary error function for the optical
//! photon-count model.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// `-1/e`, the branch point of `W0`.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Inputs this close to the branch point return exactly `-1`.
const BRANCH_SNAP: f64 = 1e-12;

const MAX_ITER: usize = 100;

/// Principal branch of the Lambert W function: the `w >= -1` solving `w e^w = x`.
///
/// Halley iteration, seeded by the branch-point series near `-1/e`, by
/// `x (1 - x)` near the origin and by `ln x - ln ln x` above `e`. For `x > e`
/// the iteration runs on `w + ln w = ln x`, which stays finite for any
/// representable `x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain {
            function: "lambert_w0",
            value: x,
            reason: "NaN",
        });
    }
    if x < BRANCH_POINT - BRANCH_SNAP {
        return Err(Error::Domain {
            function: "lambert_w0",
            value: x,
            reason: "x < -1/e",
        });
    }
    if (x - BRANCH_POINT).abs() <= BRANCH_SNAP {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if x > E {
        return Ok(w0_of_log(x.ln()));
    }

    let mut w = if x < -0.25 {
        // Series in p = sqrt(2 (e x + 1)) about the branch point.
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x.abs() <= 0.25 {
        x * (1.0 - x)
    } else {
        x.ln_1p()
    };

    let tol = 1e-14 * x.abs().max(1.0);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = (w - step).max(-1.0);
        if next == w {
            break;
        }
        w = next;
    }
    Ok(w)
}

/// `W0(exp(log_x))` without forming `exp(log_x)`.
///
/// Used where the Lambert argument is an exponential of a loss in dB and can
/// overflow long before the result does.
pub fn lambert_w0_exp(log_x: f64) -> Result<f64> {
    if log_x.is_nan() {
        return Err(Error::Domain {
            function: "lambert_w0_exp",
            value: log_x,
            reason: "NaN",
        });
    }
    if log_x <= 1.0 {
        return lambert_w0(log_x.exp());
    }
    Ok(w0_of_log(log_x))
}

/// Solves `w + ln w = log_x` for `log_x > 1` (so `w > 1`).
fn w0_of_log(log_x: f64) -> f64 {
    let mut w = if log_x > 1.5 {
        log_x - log_x.ln()
    } else {
        // near x = e the asymptotic seed is poor; W0(e) = 1
        1.0 + 0.5 * (log_x - 1.0)
    };
    for _ in 0..MAX_ITER {
        let g = w + w.ln() - log_x;
        let g1 = 1.0 + 1.0 / w;
        let g2 = -1.0 / (w * w);
        let step = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2);
        let next = w - step;
        if !(next > 0.0) {
            w *= 0.5;
            continue;
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * w {
            w = next;
            break;
        }
        w = next;
    }
    w
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Inverse of [`erfc`] on `(0, 2)`.
///
/// Newton on `ln erfc(x) = ln y` for `y <= 1`, safeguarded by a shrinking
/// bracket; `y > 1` uses `erfc_inv(y) = -erfc_inv(2 - y)`.
pub fn erfc_inv(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 2.0) {
        return Err(Error::Domain {
            function: "erfc_inv",
            value: y,
            reason: "argument must lie in (0, 2)",
        });
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    if y > 1.0 {
        return erfc_inv(2.0 - y).map(|x| -x);
    }

    let target = y.ln();
    // erfc(27) underflows past the smallest subnormal
    let (mut lo, mut hi) = (0.0_f64, 27.0_f64);
    let mut x = 0.5 * (lo + hi).min(2.0);
    for _ in 0..200 {
        let e = erfc(x);
        let h = e.ln() - target;
        if h.abs() <= 1e-13 {
            break;
        }
        if h > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dh = -2.0 / PI.sqrt() * (-x * x).exp() / e;
        let mut next = x - h / dh;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= f64::EPSILON * x.abs().max(1e-300) || hi - lo <= f64::EPSILON * hi {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}
