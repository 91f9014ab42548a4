//! Online identification of a single harmonic `Y0 + A sin(omega t + phi)`
//! from uniformly sampled measurements.

mod ampbias;
mod delay;
mod excitation;
mod freq;

pub use ampbias::{
    amp_bias_step, extract_params, regressor, AmpBiasEstimState, Discretization, HarmonicEstimate,
};
pub use delay::{DelayLine, SampleDelay};
pub use excitation::{excitation_level, optimal_tau, recommend_tau};
pub use freq::{
    build_freq_regression, freq_ft_step, freq_grad_step, recover_frequency, FreqEstimState,
    FreqRegression, FreqUpdate,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub tau: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub freq_update: FreqUpdate,
    pub discretization: Discretization,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            tau: 0.075,
            gamma1: 1.5e5,
            gamma2: 10.0,
            freq_update: FreqUpdate::Gradient,
            discretization: Discretization::ExactHold,
        }
    }
}

/// Frequency and amplitude/bias estimators chained on one delay line.
#[derive(Debug, Clone)]
pub struct HarmonicEstimator {
    delay: SampleDelay,
    line: DelayLine,
    freq: FreqEstimState,
    amp: AmpBiasEstimState,
    omega_guess: f64,
    /// Samples for which the frequency estimate sat on a clamp bound.
    pinned_samples: u64,
    updates: u64,
}

impl HarmonicEstimator {
    pub fn new(cfg: &EstimatorConfig, omega_guess: f64, dt: f64) -> Self {
        let delay = SampleDelay::from_seconds(cfg.tau, dt);
        Self {
            delay,
            line: DelayLine::for_delay(delay),
            freq: FreqEstimState::new(omega_guess, delay.seconds(), cfg.gamma1, cfg.freq_update),
            amp: AmpBiasEstimState::new(cfg.gamma2, cfg.discretization),
            omega_guess,
            pinned_samples: 0,
            updates: 0,
        }
    }

    /// Ingests `y(t)` and returns the estimate after this sample. While the
    /// delay line is filling, the frequency estimate stays at its guess.
    pub fn update(&mut self, y: f64, t: f64) -> HarmonicEstimate {
        self.line.push(y);
        if let Ok(reg) = build_freq_regression(&self.line, self.delay) {
            self.freq = self.freq.step(reg, self.delay.dt);
            self.updates += 1;
            if self.freq.theta0_hat.abs() >= 1.0 {
                self.pinned_samples += 1;
            }
        }
        let omega_hat = self.freq.omega_hat();
        self.amp = amp_bias_step(&self.amp, y, omega_hat, t, self.delay.dt);
        extract_params(&self.amp, omega_hat)
    }

    pub fn estimate(&self) -> HarmonicEstimate {
        extract_params(&self.amp, self.freq.omega_hat())
    }

    pub fn is_ready(&self) -> bool {
        self.line.spans(3 * self.delay.samples)
    }

    pub fn delay(&self) -> SampleDelay {
        self.delay
    }

    pub fn omega_guess(&self) -> f64 {
        self.omega_guess
    }

    pub fn freq_state(&self) -> &FreqEstimState {
        &self.freq
    }

    pub fn amp_state(&self) -> &AmpBiasEstimState {
        &self.amp
    }

    pub fn clamp_count(&self) -> u64 {
        self.freq.clamp_count
    }

    /// True when the estimate has left the finite range or the frequency
    /// estimate is currently stuck against a clamp bound.
    pub fn diverged(&self) -> bool {
        let e = self.estimate();
        !(e.a_hat.is_finite() && e.y0_hat.is_finite()) || self.freq.theta0_hat.abs() >= 1.0
    }

    pub fn pinned_fraction(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.pinned_samples as f64 / self.updates as f64
        }
    }
}
