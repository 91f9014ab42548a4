use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One-period integral of `phi~^2` for `y = Y0 + A sin(omega t + phi)`:
/// `16 A^2 (pi/omega) sin^2(omega tau / 2)`.
pub fn excitation_level(amplitude: f64, omega: f64, tau: f64) -> f64 {
    let s = (0.5 * omega * tau).sin();
    16.0 * amplitude * amplitude * (PI / omega) * s * s
}

/// The delay maximising the excitation of a harmonic at `omega`.
pub fn optimal_tau(omega: f64) -> f64 {
    PI / omega
}

/// `[pi/omega_max, pi/omega_min]`.
pub fn recommend_tau(omega_min: f64, omega_max: f64) -> Result<(f64, f64)> {
    if !(omega_min > 0.0) {
        return Err(Error::InvalidBounds(format!(
            "omega_min must be positive, got {omega_min}"
        )));
    }
    if !(omega_min <= omega_max) || !omega_max.is_finite() {
        return Err(Error::InvalidBounds(format!(
            "omega_min ({omega_min}) must not exceed omega_max ({omega_max})"
        )));
    }
    Ok((PI / omega_max, PI / omega_min))
}
