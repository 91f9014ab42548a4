//! Fixed-step closed-loop scenarios: plant, PI feedback, estimators and the
//! power-based compensator, recorded sample by sample.

mod config;
mod metrics;
mod summary;
mod trace;

pub use config::{
    flatten, parse_override, EstimatorSection, PlantSection, PowerSection, ScenarioConfig,
    ScenarioId, SyntheticSection, TUNED_GAMMA2,
};
pub use metrics::{
    envelope_at, envelope_metrics, envelope_of, extrema, half_swings, log_slope, EnvelopeMetrics,
    HalfSwing, MIN_HALF_SWINGS, SETTLE_FRACTION,
};
pub use summary::{summarize, RunSummary};
pub use trace::{read_trace, write_trace, SimTrace, TraceRow, COLUMNS};

use crate::error::{Error, Result};
use crate::estimator::{HarmonicEstimate, HarmonicEstimator};
use crate::lti::{dominant_mode_of, ModeInfo};
use crate::plant::{make_gtilde, pi_control, PiState, NoiseSource, Y_INDEX};
use crate::powerctl::{gain_bound, PowerController, PowerStep};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Frozen closed-loop dominant mode of plant plus PI, Coulomb term dropped.
pub fn reference_mode(cfg: &ScenarioConfig) -> Result<ModeInfo> {
    let a = cfg.plant.params().closed_loop_matrix(cfg.plant.kp, cfg.plant.ki);
    dominant_mode_of(&a)
}

fn omega_guess(cfg: &ScenarioConfig, natural: f64) -> f64 {
    if cfg.estimator.omega_guess > 0.0 {
        cfg.estimator.omega_guess
    } else {
        natural * (1.0 + cfg.estimator.omega_guess_error)
    }
}

fn base_metadata(cfg: &ScenarioConfig) -> Vec<String> {
    let mut meta = vec![format!("version = \"{VERSION}\"")];
    meta.extend(cfg.echo().into_iter().map(|l| format!("config.{l}")));
    meta
}

/// Runs one scenario. A numerical blowup ends the run early; the rows up to
/// that point are kept and the time is recorded as `diag.truncated_at`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimTrace> {
    cfg.validate()?;
    match cfg.scenario {
        ScenarioId::SyntheticEstimation => Ok(run_synthetic(cfg)),
        _ => run_closed_loop(cfg),
    }
}

fn run_synthetic(cfg: &ScenarioConfig) -> SimTrace {
    let s = cfg.synthetic;
    let guess = omega_guess(cfg, s.omega);
    let mut est = HarmonicEstimator::new(&cfg.estimator.core, guess, cfg.dt);
    let mut noise = cfg.noise.source();
    let mut meta = base_metadata(cfg);
    meta.push(format!("ref.omega = {}", s.omega));
    meta.push(format!("ref.amplitude = {}", s.amplitude));
    meta.push(format!("ref.bias = {}", s.bias));
    meta.push(format!("ref.theta0 = {}", (s.omega * est.delay().seconds()).cos()));
    push_estimator_meta(&mut meta, &est, guess);

    let mut rows = Vec::with_capacity(cfg.steps());
    for n in 0..cfg.steps() {
        let t = n as f64 * cfg.dt;
        let y_true = s.bias + s.amplitude * (s.omega * t + s.phase).sin();
        let y_meas = y_true + noise.sample();
        let e = est.update(y_meas, t);
        rows.push(row(t, y_meas, y_true, 0.0, None, &e));
    }
    push_estimator_diag(&mut meta, &est);
    meta.push("diag.truncated_at = none".into());
    SimTrace {
        metadata: meta,
        rows,
    }
}

fn push_estimator_meta(meta: &mut Vec<String>, est: &HarmonicEstimator, guess: f64) {
    let d = est.delay();
    meta.push(format!("ref.tau_effective = {}", d.seconds()));
    meta.push(format!("ref.omega_guess = {guess}"));
    if d.rounding_error() != 0.0 {
        meta.push(format!(
            "assumption: tau rounded from {} s to {} samples ({} s)",
            d.requested,
            d.samples,
            d.seconds()
        ));
    }
    meta.push("assumption: estimator initial state theta_hat = 0, theta0_hat = cos(omega_guess * tau)".into());
}

fn push_estimator_diag(meta: &mut Vec<String>, est: &HarmonicEstimator) {
    meta.push(format!("diag.clamp_count = {}", est.clamp_count()));
    meta.push(format!("diag.pinned_fraction = {}", est.pinned_fraction()));
    meta.push(format!("diag.diverged = {}", est.diverged()));
}

fn row(t: f64, y_meas: f64, y_true: f64, u_tilde: f64, p: Option<&PowerStep>, e: &HarmonicEstimate) -> TraceRow {
    TraceRow {
        t,
        y_meas,
        y_true,
        u_tilde,
        u_prime: p.map_or(0.0, |p| p.u_prime),
        u_bar: p.map_or(0.0, |p| p.u_bar),
        omega_hat: e.omega_hat,
        a_hat: e.a_hat,
        y0_hat: e.y0_hat,
        peak_flag: p.and_then(|p| p.peak).map_or(0, |ev| ev.sign as i8),
    }
}

fn run_closed_loop(cfg: &ScenarioConfig) -> Result<SimTrace> {
    let params = cfg.plant.params();
    let mode = reference_mode(cfg)?;
    let gtilde = make_gtilde();
    let (mut state, r2) = params.equilibrium(cfg.plant.r1)?;
    state.x[Y_INDEX] += cfg.plant.initial_y_offset;

    let guess = omega_guess(cfg, mode.omega);
    let mut est = HarmonicEstimator::new(&cfg.estimator.core, guess, cfg.dt);
    let mut pi = PiState {
        kp: cfg.plant.kp,
        ki: cfg.plant.ki,
        ..PiState::new(cfg.plant.r1, r2)
    };
    let mut noise: NoiseSource = cfg.noise.source();
    let mut power = cfg.powerctl.enabled.then(|| {
        PowerController::new(cfg.powerctl.ctl, gtilde.clone(), cfg.noise.effective_bound(), cfg.dt)
    });

    let mut meta = base_metadata(cfg);
    meta.push(format!("ref.sigma_dom = {}", mode.sigma));
    meta.push(format!("ref.omega_dom = {}", mode.omega));
    meta.push(format!("ref.k_max_dom = {}", gain_bound(&gtilde, mode.omega)?));
    meta.push(format!("ref.r2 = {r2}"));
    push_estimator_meta(&mut meta, &est, guess);
    meta.push("assumption: R2 is the input holding the equilibrium at y = R1 with the sign term at zero".into());
    meta.push(format!(
        "assumption: initial state is the equilibrium with the load displaced by {} m",
        cfg.plant.initial_y_offset
    ));
    meta.push(format!(
        "assumption: measurement noise {:?} with bound {} m, seed {}",
        cfg.noise.kind, cfg.noise.bound, cfg.noise.seed
    ));

    let mut rows = Vec::with_capacity(cfg.steps());
    let mut truncated_at = None;
    for n in 0..cfg.steps() {
        let t = n as f64 * cfg.dt;
        let y_true = state.output(&params);
        let y_meas = y_true + noise.sample();
        let e = est.update(y_meas, t);
        let p = power.as_mut().map(|pc| pc.step(n as u64, t, y_meas, &e));
        let (next_pi, u_tilde) = pi_control(&pi, y_meas, cfg.dt);
        pi = next_pi;
        let u = u_tilde + p.as_ref().map_or(0.0, |p| p.u_bar);
        rows.push(row(t, y_meas, y_true, u_tilde, p.as_ref(), &e));
        match params.step(&state, u, cfg.dt) {
            Ok(next) => state = next,
            Err(Error::NumericalBlowup { .. }) => {
                truncated_at = Some(t + cfg.dt);
                break;
            }
            Err(other) => return Err(other),
        }
    }

    push_estimator_diag(&mut meta, &est);
    if let Some(pc) = &power {
        let d = pc.diagnostics();
        meta.push(format!("diag.peaks = {}", d.peaks));
        meta.push(format!("diag.commands = {}", d.commands));
        meta.push(format!("diag.low_frequency_holds = {}", d.low_frequency_holds));
        meta.push(format!("diag.gain_warnings = {}", d.gain_warnings));
        if let Some(w) = d.first_gain_warning {
            meta.push(format!(
                "warning: K = {} outside (1, {}) at t = {} s (omega_hat = {} rad/s)",
                cfg.powerctl.ctl.gain, w.k_max, w.t, w.omega_hat
            ));
        }
        if let Some(delay) = d.last_delay {
            meta.push(format!("diag.last_delay = {delay}"));
        }
    }
    meta.push(match truncated_at {
        Some(t) => format!("diag.truncated_at = {t}"),
        None => "diag.truncated_at = none".into(),
    });
    Ok(SimTrace {
        metadata: meta,
        rows,
    })
}

impl SimTrace {
    pub fn truncated_at(&self) -> Option<f64> {
        self.meta_f64("diag.truncated_at")
    }
}
