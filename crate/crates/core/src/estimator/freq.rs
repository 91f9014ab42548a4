//! Frequency identification from the delayed-difference regression
//! `y~(t) = phi~(t) * cos(omega*tau)`.

use serde::{Deserialize, Serialize};

use super::delay::{DelayLine, SampleDelay};
use crate::error::{Error, Result};
use crate::plant::sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreqUpdate {
    /// Plain gradient descent.
    Gradient,
    /// Square-root error injection, converges in finite time.
    FiniteTime,
}

/// Regression pair built from four delayed samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqRegression {
    pub y_tilde: f64,
    pub phi_tilde: f64,
}

/// `y~ = y(t-3tau) - y(t-2tau) + y(t-tau) - y(t)`, `phi~ = 2(y(t-2tau) - y(t-tau))`.
pub fn build_freq_regression(line: &DelayLine, delay: SampleDelay) -> Result<FreqRegression> {
    let k = delay.samples;
    if !line.spans(3 * k) {
        return Err(Error::NotReady);
    }
    let tap = |m: usize| line.tap(m * k).expect("span checked above");
    let (y0, y1, y2, y3) = (tap(0), tap(1), tap(2), tap(3));
    Ok(FreqRegression {
        y_tilde: y3 - y2 + y1 - y0,
        phi_tilde: 2.0 * (y2 - y1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqEstimState {
    /// Estimate of `cos(omega*tau)`, kept in [-1, 1].
    pub theta0_hat: f64,
    pub tau: f64,
    pub gamma1: f64,
    pub mode: FreqUpdate,
    pub clamp_count: u64,
}

impl FreqEstimState {
    pub fn new(omega_guess: f64, tau: f64, gamma1: f64, mode: FreqUpdate) -> Self {
        Self {
            theta0_hat: (omega_guess * tau).cos(),
            tau,
            gamma1,
            mode,
            clamp_count: 0,
        }
    }

    pub fn omega_hat(&self) -> f64 {
        recover_frequency(self.theta0_hat, self.tau)
    }

    pub fn step(&self, reg: FreqRegression, dt: f64) -> Self {
        match self.mode {
            FreqUpdate::Gradient => freq_grad_step(self, reg, dt),
            FreqUpdate::FiniteTime => freq_ft_step(self, reg, dt),
        }
    }

    fn advanced(&self, rate: f64, dt: f64) -> Self {
        let raw = self.theta0_hat + dt * rate;
        let clamped = raw.clamp(-1.0, 1.0);
        Self {
            theta0_hat: clamped,
            clamp_count: self.clamp_count + u64::from(clamped != raw),
            ..*self
        }
    }
}

pub fn freq_grad_step(st: &FreqEstimState, reg: FreqRegression, dt: f64) -> FreqEstimState {
    let e = reg.y_tilde - reg.phi_tilde * st.theta0_hat;
    st.advanced(st.gamma1 * reg.phi_tilde * e, dt)
}

pub fn freq_ft_step(st: &FreqEstimState, reg: FreqRegression, dt: f64) -> FreqEstimState {
    let e = reg.y_tilde - reg.phi_tilde * st.theta0_hat;
    st.advanced(st.gamma1 * reg.phi_tilde * e.abs().sqrt() * sign(e), dt)
}

/// `arccos(theta0) / tau`, in [0, pi/tau]. Out-of-range input is clamped.
pub fn recover_frequency(theta0_hat: f64, tau: f64) -> f64 {
    theta0_hat.clamp(-1.0, 1.0).acos() / tau
}
