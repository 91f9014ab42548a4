//! Peak-commutated power-based compensator with delay synchronization and
//! gain shaping.

mod buffer;
mod peak;

pub use buffer::CommandBuffer;
pub use peak::{PeakConfig, PeakDetector, PeakEvent};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::HarmonicEstimate;
use crate::lti::{eval_tf, RationalTF};

/// `sqrt(3) / (2 pi)`.
pub const OPTIMAL_K: f64 = 0.275_664_447_710_896_04;

pub const DEFAULT_OMEGA_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCtlConfig {
    pub k: f64,
    /// Shaping gain applied to the delayed command.
    #[serde(rename = "K")]
    pub gain: f64,
    pub enable_time: f64,
    /// Multiple of the estimated frequency at which the phase lag is read.
    pub arg_freq_multiplier: u8,
    pub omega_floor: f64,
    pub peak: PeakConfig,
}

impl Default for PowerCtlConfig {
    fn default() -> Self {
        Self {
            k: OPTIMAL_K,
            gain: 2.4,
            enable_time: 2.5,
            arg_freq_multiplier: 2,
            omega_floor: DEFAULT_OMEGA_FLOOR,
            peak: PeakConfig::default(),
        }
    }
}

impl PowerCtlConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !matches!(self.arg_freq_multiplier, 1 | 2) {
            return Err(format!(
                "arg_freq_multiplier must be 1 or 2, got {}",
                self.arg_freq_multiplier
            ));
        }
        if self.peak.window == 0 {
            return Err("peak.window must be at least 1".into());
        }
        if !(self.omega_floor >= 0.0) {
            return Err("omega_floor must be non-negative".into());
        }
        Ok(())
    }
}

/// `k * omega^2 * A * sign`.
pub fn power_command(snapshot: &HarmonicEstimate, sign: f64, k: f64) -> f64 {
    k * snapshot.omega_hat * snapshot.omega_hat * snapshot.a_hat * sign
}

/// `(2 pi + arg G~(j mult omega)) / omega`.
pub fn sync_delay(gtilde: &RationalTF, omega_hat: f64, mult: f64, omega_floor: f64) -> Result<f64> {
    if !(omega_hat > omega_floor) {
        return Err(Error::FrequencyTooLow {
            omega: omega_hat,
            floor: omega_floor,
        });
    }
    let phase = eval_tf(gtilde, mult * omega_hat)?.phase;
    Ok((2.0 * PI + phase) / omega_hat)
}

/// `1 / |G~(j omega)|`.
pub fn gain_bound(gtilde: &RationalTF, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidBounds(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    Ok(1.0 / eval_tf(gtilde, omega)?.magnitude)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCheck {
    pub magnitude: f64,
    pub k_max: f64,
    pub gain: f64,
}

impl GainCheck {
    pub fn evaluate(gtilde: &RationalTF, omega: f64, gain: f64) -> Result<Self> {
        let k_max = gain_bound(gtilde, omega)?;
        Ok(Self {
            magnitude: 1.0 / k_max,
            k_max,
            gain,
        })
    }

    pub fn above_lower(&self) -> bool {
        self.gain > 1.0
    }

    pub fn below_upper(&self) -> bool {
        self.gain < self.k_max
    }

    pub fn passes(&self) -> bool {
        self.above_lower() && self.below_upper()
    }
}

/// Commanded shaping gain outside `(1, K_max)` at the estimate of the moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainWarning {
    pub t: f64,
    pub omega_hat: f64,
    pub k_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerDiagnostics {
    pub peaks: u64,
    pub commands: u64,
    /// Peaks after enable at which the frequency estimate sat below the floor.
    pub low_frequency_holds: u64,
    pub gain_warnings: u64,
    pub first_gain_warning: Option<GainWarning>,
    pub last_gain_warning: Option<GainWarning>,
    pub last_delay: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerStep {
    pub u_prime: f64,
    pub u_bar: f64,
    pub peak: Option<PeakEvent>,
}

/// Per-sample compensator state machine.
#[derive(Debug, Clone)]
pub struct PowerController {
    cfg: PowerCtlConfig,
    gtilde: RationalTF,
    dt: f64,
    detector: PeakDetector,
    buffer: CommandBuffer,
    u_prime: f64,
    diag: PowerDiagnostics,
}

impl PowerController {
    pub fn new(cfg: PowerCtlConfig, gtilde: RationalTF, noise_bound: f64, dt: f64) -> Self {
        Self {
            detector: PeakDetector::new(cfg.peak, noise_bound, dt),
            buffer: CommandBuffer::new(cfg.gain, 0),
            cfg,
            gtilde,
            dt,
            u_prime: 0.0,
            diag: PowerDiagnostics::default(),
        }
    }

    pub fn config(&self) -> &PowerCtlConfig {
        &self.cfg
    }

    pub fn diagnostics(&self) -> &PowerDiagnostics {
        &self.diag
    }

    /// Advances one sample `n` at time `t` with the measured output and the
    /// current estimate. Commands are issued only at peaks after enable.
    pub fn step(&mut self, n: u64, t: f64, y_meas: f64, est: &HarmonicEstimate) -> PowerStep {
        let peak = self.detector.push(y_meas - est.y0_hat, t, est);
        if let Some(ev) = &peak {
            self.diag.peaks += 1;
            if t >= self.cfg.enable_time {
                self.on_peak(n, ev);
            }
        }
        PowerStep {
            u_prime: self.u_prime,
            u_bar: self.buffer.output(n),
            peak,
        }
    }

    fn on_peak(&mut self, n: u64, ev: &PeakEvent) {
        let omega = ev.snapshot.omega_hat;
        let mult = f64::from(self.cfg.arg_freq_multiplier);
        let delay = match sync_delay(&self.gtilde, omega, mult, self.cfg.omega_floor) {
            Ok(d) => d,
            Err(_) => {
                self.diag.low_frequency_holds += 1;
                return;
            }
        };
        self.diag.last_delay = Some(delay);
        self.buffer.set_delay((delay / self.dt).round() as usize);
        self.u_prime = power_command(&ev.snapshot, ev.sign, self.cfg.k);
        // the delay counts from the extremum, not from its detection
        let n_star = ((ev.t_star / self.dt).round().max(0.0) as u64).min(n);
        self.buffer.issue(n_star, self.u_prime);
        self.diag.commands += 1;

        let k_max = gain_bound(&self.gtilde, omega).unwrap_or(f64::NAN);
        if !(self.cfg.gain > 1.0 && self.cfg.gain < k_max) {
            let w = GainWarning {
                t: ev.t_detect,
                omega_hat: omega,
                k_max,
            };
            self.diag.gain_warnings += 1;
            self.diag.first_gain_warning.get_or_insert(w);
            self.diag.last_gain_warning = Some(w);
        }
    }
}
