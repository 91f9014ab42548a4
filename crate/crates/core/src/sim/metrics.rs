//! Envelope of an oscillating signal from its extrema.
//!
//! Each pair of consecutive extrema gives a half-swing `|y_i - y_{i-1}| / 2`
//! stamped at their midpoint. For `Y0 + e^{s t} sin(w t)` the half-swings lie
//! exactly on `c e^{s t}`, so the fit is independent of the bias.

use serde::Serialize;

use super::trace::SimTrace;
use crate::error::{Error, Result};

/// Two periods of oscillation.
pub const MIN_HALF_SWINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfSwing {
    pub t: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeMetrics {
    pub window: (f64, f64),
    pub amplitudes: Vec<HalfSwing>,
    /// Least-squares slope of `ln(amplitude)` against time, 1/s.
    pub sigma_fit: f64,
    /// Final amplitude at most `SETTLE_FRACTION` of the first.
    pub settled: bool,
}

pub const SETTLE_FRACTION: f64 = 0.25;

/// Indices of strict local extrema, alternating between maxima and minima.
pub fn extrema(y: &[f64]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut last_kind = 0i8;
    let mut i = 1;
    while i + 1 < y.len() {
        // skip plateaus to their far end
        let mut j = i;
        while j + 1 < y.len() && y[j + 1] == y[i] {
            j += 1;
        }
        if j + 1 >= y.len() {
            break;
        }
        let kind = if y[i] > y[i - 1] && y[i] > y[j + 1] {
            1
        } else if y[i] < y[i - 1] && y[i] < y[j + 1] {
            -1
        } else {
            0
        };
        if kind != 0 {
            let idx = (i + j) / 2;
            if kind == last_kind {
                // same kind twice: keep the more extreme one
                let prev = out.last_mut().expect("last_kind set");
                if (y[idx] - y[*prev]) * f64::from(kind) > 0.0 {
                    *prev = idx;
                }
            } else {
                out.push(idx);
                last_kind = kind;
            }
        }
        i = j + 1;
    }
    out
}

pub fn half_swings(t: &[f64], y: &[f64]) -> Vec<HalfSwing> {
    let ex = extrema(y);
    ex.windows(2)
        .map(|w| HalfSwing {
            t: 0.5 * (t[w[0]] + t[w[1]]),
            amplitude: 0.5 * (y[w[1]] - y[w[0]]).abs(),
        })
        .filter(|h| h.amplitude > 0.0)
        .collect()
}

/// Least-squares slope of `ln(amplitude)` against time.
pub fn log_slope(points: &[HalfSwing]) -> f64 {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.t).sum::<f64>() / n;
    let ml = points.iter().map(|p| p.amplitude.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in points {
        let dt = p.t - mt;
        sxy += dt * (p.amplitude.ln() - ml);
        sxx += dt * dt;
    }
    sxy / sxx
}

pub fn envelope_of(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<EnvelopeMetrics> {
    let (t0, t1) = window;
    let lo = t.partition_point(|v| *v < t0);
    let hi = t.partition_point(|v| *v <= t1);
    let swings = if hi > lo {
        half_swings(&t[lo..hi], &y[lo..hi])
    } else {
        Vec::new()
    };
    if swings.len() < MIN_HALF_SWINGS {
        return Err(Error::InsufficientPeriods {
            found: swings.len(),
            needed: MIN_HALF_SWINGS,
        });
    }
    let sigma_fit = log_slope(&swings);
    let settled = swings[swings.len() - 1].amplitude <= SETTLE_FRACTION * swings[0].amplitude;
    Ok(EnvelopeMetrics {
        window,
        amplitudes: swings,
        sigma_fit,
        settled,
    })
}

/// Envelope of the noise-free output over `[t0, t1]`.
pub fn envelope_metrics(trace: &SimTrace, window: (f64, f64)) -> Result<EnvelopeMetrics> {
    let t: Vec<f64> = trace.rows.iter().map(|r| r.t).collect();
    let y: Vec<f64> = trace.rows.iter().map(|r| r.y_true).collect();
    envelope_of(&t, &y, window)
}

/// Mean half-swing over the period ending at `at`, with the period taken
/// from the extrema spacing around it.
pub fn envelope_at(swings: &[HalfSwing], at: f64) -> Option<f64> {
    let upto = swings.partition_point(|h| h.t <= at);
    if upto < 2 {
        return None;
    }
    let period = 2.0 * (swings[upto - 1].t - swings[upto - 2].t);
    let inside: Vec<f64> = swings[..upto]
        .iter()
        .rev()
        .take_while(|h| h.t > at - period)
        .map(|h| h.amplitude)
        .collect();
    Some(inside.iter().sum::<f64>() / inside.len() as f64)
}
