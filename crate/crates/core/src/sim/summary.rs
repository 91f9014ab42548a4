use std::fmt;

use serde::Serialize;

use super::metrics::{envelope_at, envelope_of, half_swings};
use super::trace::SimTrace;

/// Human-readable run report. Built from the trace alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub rows: usize,
    pub truncated_at: Option<f64>,
    pub sigma_fit: Option<f64>,
    pub sigma_fit_pre_enable: Option<f64>,
    pub sigma_fit_post_enable: Option<f64>,
    pub sigma_dom: Option<f64>,
    pub enable_time: Option<f64>,
    pub envelope_at_enable: Option<f64>,
    pub envelope_at_end: Option<f64>,
    pub omega_hat_end: Option<f64>,
    pub a_hat_end: Option<f64>,
    pub y0_hat_end: Option<f64>,
    /// Relative terminal errors against the reference recorded in metadata.
    pub omega_error: Option<f64>,
    pub amplitude_error: Option<f64>,
    pub bias_error: Option<f64>,
    pub clamp_count: Option<f64>,
    pub diverged: Option<bool>,
    pub gain_warnings: Option<f64>,
    pub k_max_dom: Option<f64>,
    pub gain: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn summarize(trace: &SimTrace) -> RunSummary {
    let t: Vec<f64> = trace.rows.iter().map(|r| r.t).collect();
    let y: Vec<f64> = trace.rows.iter().map(|r| r.y_true).collect();
    let t_end = t.last().copied().unwrap_or(0.0);
    let powered = trace.meta_bool("config.powerctl.enabled").unwrap_or(false);
    let enable = powered
        .then(|| trace.meta_f64("config.powerctl.enable_time"))
        .flatten();
    let sigma = |t0: f64, t1: f64| envelope_of(&t, &y, (t0, t1)).ok().map(|m| m.sigma_fit);
    let swings = half_swings(&t, &y);
    let last = trace.rows.last();

    let synthetic = trace.meta("ref.amplitude").is_some();
    let rel = |est: Option<f64>, truth: Option<f64>| match (est, truth) {
        (Some(e), Some(r)) if r != 0.0 => Some((e - r).abs() / r.abs()),
        _ => None,
    };
    let omega_ref = trace
        .meta_f64("ref.omega")
        .or_else(|| trace.meta_f64("ref.omega_dom"));
    let amp_ref = if synthetic {
        trace.meta_f64("ref.amplitude")
    } else {
        envelope_at(&swings, t_end)
    };
    let bias_ref = trace
        .meta_f64("ref.bias")
        .or_else(|| trace.meta_f64("config.plant.r1"));

    RunSummary {
        scenario: trace
            .meta("config.scenario")
            .unwrap_or("unknown")
            .trim_matches('"')
            .to_string(),
        rows: trace.rows.len(),
        truncated_at: trace.truncated_at(),
        sigma_fit: sigma(0.0, t_end),
        sigma_fit_pre_enable: enable.and_then(|e| sigma(0.0, e)),
        sigma_fit_post_enable: enable.and_then(|e| sigma(e, t_end)),
        sigma_dom: trace.meta_f64("ref.sigma_dom"),
        enable_time: enable,
        envelope_at_enable: enable.and_then(|e| envelope_at(&swings, e)),
        envelope_at_end: envelope_at(&swings, t_end),
        omega_hat_end: last.map(|r| r.omega_hat),
        a_hat_end: last.map(|r| r.a_hat),
        y0_hat_end: last.map(|r| r.y0_hat),
        omega_error: rel(last.map(|r| r.omega_hat), omega_ref),
        amplitude_error: rel(last.map(|r| r.a_hat), amp_ref),
        bias_error: rel(last.map(|r| r.y0_hat), bias_ref),
        clamp_count: trace.meta_f64("diag.clamp_count"),
        diverged: trace.meta_bool("diag.diverged"),
        gain_warnings: trace.meta_f64("diag.gain_warnings"),
        k_max_dom: trace.meta_f64("ref.k_max_dom"),
        gain: powered.then(|| trace.meta_f64("config.powerctl.K")).flatten(),
        warnings: trace
            .metadata
            .iter()
            .filter_map(|l| l.strip_prefix("warning: "))
            .map(str::to_string)
            .collect(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.6}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{:.3}%", 100.0 * x))
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario            {}", self.scenario)?;
        writeln!(f, "rows                {}", self.rows)?;
        match self.truncated_at {
            Some(t) => writeln!(f, "truncated           yes, numerical blowup at t = {t} s")?,
            None => writeln!(f, "truncated           no")?,
        }
        writeln!(f, "sigma_fit           {} 1/s", opt(self.sigma_fit))?;
        if self.sigma_dom.is_some() {
            writeln!(f, "sigma frozen LTI    {} 1/s", opt(self.sigma_dom))?;
        }
        if let Some(e) = self.enable_time {
            writeln!(f, "sigma_fit < {e} s   {} 1/s", opt(self.sigma_fit_pre_enable))?;
            writeln!(f, "sigma_fit > {e} s   {} 1/s", opt(self.sigma_fit_post_enable))?;
            writeln!(f, "envelope at enable  {} m", opt(self.envelope_at_enable))?;
        }
        writeln!(f, "envelope at end     {} m", opt(self.envelope_at_end))?;
        if let (Some(e0), Some(e1)) = (self.envelope_at_enable, self.envelope_at_end) {
            writeln!(f, "envelope ratio      {:.4}", e1 / e0)?;
        }
        writeln!(f, "omega_hat at end    {} rad/s (error {})", opt(self.omega_hat_end), pct(self.omega_error))?;
        writeln!(f, "A_hat at end        {} m (error {})", opt(self.a_hat_end), pct(self.amplitude_error))?;
        writeln!(f, "Y0_hat at end       {} m (error {})", opt(self.y0_hat_end), pct(self.bias_error))?;
        writeln!(f, "clamp events        {}", opt(self.clamp_count))?;
        if let Some(d) = self.diverged {
            writeln!(f, "estimator diverged  {d}")?;
        }
        if let Some(g) = self.gain {
            writeln!(f, "K                   {g} (K_max at omega_dom {})", opt(self.k_max_dom))?;
            writeln!(f, "K-window warnings   {}", opt(self.gain_warnings))?;
        }
        for w in &self.warnings {
            writeln!(f, "warning             {w}")?;
        }
        Ok(())
    }
}
