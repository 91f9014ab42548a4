//! Brute-force check of the commutation gain `k` on an undamped unit
//! oscillator `y'' = -omega^2 y + u`, with `u = k omega^2 |y*| sign(y*)`
//! switched at every extremum `y*` and held until the next one.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorOracle {
    pub omega: f64,
    /// Integration steps per period.
    pub steps_per_period: usize,
    /// Periods simulated per grid point.
    pub periods: usize,
    /// Delay between an extremum and the command reaching the input, in
    /// periods.
    pub delay_periods: f64,
}

impl Default for OscillatorOracle {
    fn default() -> Self {
        Self {
            omega: 1.0,
            steps_per_period: 4000,
            periods: 4,
            delay_periods: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: f64,
    /// Geometric-mean ratio of consecutive same-sign peak magnitudes.
    pub ratio: f64,
}

impl OscillatorOracle {
    /// Per-period amplitude ratio for gain `k`, starting from `y = 1` at rest.
    pub fn amplitude_ratio(&self, k: f64) -> f64 {
        let w2 = self.omega * self.omega;
        let period = 2.0 * std::f64::consts::PI / self.omega;
        let dt = period / self.steps_per_period as f64;
        let delay = (self.delay_periods * self.steps_per_period as f64).round() as usize;
        let total = self.periods * self.steps_per_period;

        let mut x = [1.0, 0.0];
        let mut u = k * w2;
        let mut scheduled: Vec<(usize, f64)> = Vec::new();
        if delay > 0 {
            scheduled.push((delay, u));
            u = 0.0;
        }
        let mut peaks = vec![1.0_f64];
        let mut prev_v = 0.0_f64;
        for n in 0..total {
            if let Some(pos) = scheduled.iter().position(|(at, _)| *at == n) {
                u = scheduled.remove(pos).1;
            }
            let rate = |s: &[f64; 2]| [s[1], -w2 * s[0] + u];
            x = crate::lti::rk4_step(&x, dt, rate);
            let v = x[1];
            if prev_v != 0.0 && v.signum() != prev_v.signum() {
                // extremum about the current centre, from the oscillator energy
                let c = u / w2;
                let dev = x[0] - c;
                let y = c + dev.signum() * (dev * dev + v * v / w2).sqrt();
                peaks.push(y.abs());
                if y.abs() < 1e-12 {
                    break;
                }
                let cmd = k * w2 * y.abs() * y.signum();
                if delay > 0 {
                    scheduled.push((n + 1 + delay, cmd));
                } else {
                    u = cmd;
                }
            }
            prev_v = v;
        }
        let full = (peaks.len() - 1) / 2;
        if full == 0 {
            return 0.0;
        }
        let last = peaks[2 * full];
        if last < 1e-12 {
            return 0.0;
        }
        (last / peaks[0]).powf(1.0 / full as f64)
    }
}

pub fn k_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

pub fn sweep_k(grid: &[f64], oracle: &OscillatorOracle) -> Vec<SweepPoint> {
    grid.iter()
        .map(|&k| SweepPoint {
            k,
            ratio: oracle.amplitude_ratio(k),
        })
        .collect()
}

/// Smallest ratio; ties go to the smaller `k`.
pub fn argmin(points: &[SweepPoint]) -> Option<SweepPoint> {
    points
        .iter()
        .copied()
        .reduce(|best, p| if p.ratio < best.ratio { p } else { best })
}
