use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::estimator::HarmonicEstimate;
use crate::plant::sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakConfig {
    /// Moving-average length in samples.
    pub window: usize,
    /// Minimum `|y - Y0|` of the smoothed signal, in multiples of the noise bound.
    pub floor_factor: f64,
    /// Minimum event spacing as a fraction of the estimated period.
    pub min_separation: f64,
    /// Retreat from the running extreme that confirms a turn, in multiples
    /// of the noise bound.
    pub hysteresis_factor: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            window: 21,
            floor_factor: 2.0,
            min_separation: 0.25,
            hysteresis_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEvent {
    /// Estimated extremum time, corrected for the smoothing lag.
    pub t_star: f64,
    /// Time the extremum was recognised.
    pub t_detect: f64,
    pub sign: f64,
    /// Smoothed `y - Y0` at the extremum.
    pub deviation: f64,
    pub snapshot: HarmonicEstimate,
}

/// Extremum detector on the moving average of `y - Y0`.
///
/// A turn is confirmed once the average retreats from its running extreme
/// by more than the hysteresis band; the extreme itself marks the event.
#[derive(Debug, Clone)]
pub struct PeakDetector {
    cfg: PeakConfig,
    floor: f64,
    band: f64,
    dt: f64,
    buf: VecDeque<f64>,
    sum: f64,
    prev_avg: Option<f64>,
    direction: f64,
    extreme: f64,
    t_extreme: f64,
    last_event: Option<f64>,
}

impl PeakDetector {
    /// `noise_bound` scales the amplitude floor and the hysteresis band.
    pub fn new(cfg: PeakConfig, noise_bound: f64, dt: f64) -> Self {
        let window = cfg.window.max(1);
        Self {
            cfg: PeakConfig { window, ..cfg },
            floor: cfg.floor_factor * noise_bound,
            band: cfg.hysteresis_factor * noise_bound,
            dt,
            buf: VecDeque::with_capacity(window),
            sum: 0.0,
            prev_avg: None,
            direction: 0.0,
            extreme: 0.0,
            t_extreme: 0.0,
            last_event: None,
        }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Lag of the moving average relative to the raw signal, in seconds.
    pub fn smoothing_lag(&self) -> f64 {
        (self.cfg.window / 2) as f64 * self.dt
    }

    /// Feeds one sample of `y - Y0` taken at `t`.
    pub fn push(&mut self, deviation: f64, t: f64, estimate: &HarmonicEstimate) -> Option<PeakEvent> {
        if self.buf.len() == self.cfg.window {
            self.sum -= self.buf.pop_front().unwrap_or(0.0);
        }
        self.buf.push_back(deviation);
        self.sum += deviation;
        let avg = self.sum / self.buf.len() as f64;
        let prev = self.prev_avg.replace(avg)?;

        if self.direction == 0.0 {
            self.direction = sign(avg - prev);
            self.extreme = avg;
            self.t_extreme = t;
            return None;
        }
        if (avg - self.extreme) * self.direction >= 0.0 {
            self.extreme = avg;
            self.t_extreme = t;
            return None;
        }
        if (self.extreme - avg).abs() <= self.band {
            return None;
        }
        let (peak, t_peak) = (self.extreme, self.t_extreme);
        self.direction = -self.direction;
        self.extreme = avg;
        self.t_extreme = t;

        if peak.abs() < self.floor {
            return None;
        }
        let t_star = t_peak - self.smoothing_lag();
        let period = 2.0 * std::f64::consts::PI / estimate.omega_hat.max(1e-3);
        if let Some(last) = self.last_event {
            if t_star - last <= self.cfg.min_separation * period {
                return None;
            }
        }
        self.last_event = Some(t_star);
        Some(PeakEvent {
            t_star,
            t_detect: t,
            sign: sign(peak),
            deviation: peak,
            snapshot: *estimate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::NoiseModel;
    use std::f64::consts::PI;

    fn est(omega: f64) -> HarmonicEstimate {
        HarmonicEstimate {
            omega_hat: omega,
            a_hat: 0.0,
            y0_hat: 0.0,
            phi_hat: 0.0,
        }
    }

    fn raw(window: usize) -> PeakDetector {
        let cfg = PeakConfig {
            window,
            floor_factor: 0.0,
            min_separation: 0.0,
            hysteresis_factor: 0.0,
        };
        PeakDetector::new(cfg, 0.0, 1.0)
    }

    #[test]
    fn local_maximum() {
        let mut d = raw(1);
        let e = est(1.0);
        assert!(d.push(0.9, 0.0, &e).is_none());
        assert!(d.push(1.0, 1.0, &e).is_none());
        let ev = d.push(0.9, 2.0, &e).expect("maximum");
        assert_eq!(ev.sign, 1.0);
        assert_eq!(ev.deviation, 1.0);
    }

    #[test]
    fn ramp_has_no_events() {
        let mut d = raw(5);
        for i in 0..1000 {
            assert!(d.push(i as f64 * 0.01, i as f64, &est(1.0)).is_none());
        }
    }

    #[test]
    fn floor_rejects_small_wiggles() {
        let cfg = PeakConfig {
            window: 1,
            floor_factor: 2.0,
            min_separation: 0.0,
            hysteresis_factor: 0.0,
        };
        let mut d = PeakDetector::new(cfg, 0.5, 1.0);
        let e = est(1.0);
        for (i, y) in [0.0, 0.9, 0.0, -0.9, 0.0, 1.5, 0.0].iter().enumerate() {
            let ev = d.push(*y, i as f64, &e);
            assert_eq!(ev.is_some(), i == 6);
        }
    }

    #[test]
    fn noisy_sinusoid_two_events_per_period() {
        let dt = 5e-4;
        let w = 16.27;
        let a = 1e-3;
        let period = 2.0 * PI / w;
        let noise = NoiseModel {
            bound: 5e-5,
            seed: 11,
            ..NoiseModel::default()
        };
        let mut src = noise.source();
        let mut d = PeakDetector::new(PeakConfig::default(), noise.bound, dt);
        let phase = 0.4;
        let mut events = Vec::new();
        let n = (20.0 * period / dt) as usize;
        for i in 0..n {
            let t = i as f64 * dt;
            let y = a * (w * t + phase).sin() + src.sample();
            if let Some(ev) = d.push(y, t, &est(w)) {
                events.push(ev);
            }
        }
        // steady-state window: periods 2..18
        let (t0, t1) = (2.0 * period, 18.0 * period);
        let inside: Vec<_> = events
            .iter()
            .filter(|e| e.t_star >= t0 && e.t_star < t1)
            .collect();
        assert_eq!(inside.len(), 32);
        for pair in inside.windows(2) {
            assert_eq!(pair[0].sign, -pair[1].sign);
        }
        for ev in inside {
            // extrema of sin(w t + phase) at w t + phase = pi/2 + m pi
            let m = ((w * ev.t_star + phase - PI / 2.0) / PI).round();
            let t_true = (PI / 2.0 + m * PI - phase) / w;
            assert!((ev.t_star - t_true).abs() < 0.05 * period, "{} {}", ev.t_star, t_true);
            let expected_sign = if (m as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            assert_eq!(ev.sign, expected_sign);
        }
    }
}
