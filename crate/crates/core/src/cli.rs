//! Command-line front end. Exit codes: 0 success, 1 gain check failed,
//! 2 configuration or input error, 3 numerical blowup, 4 I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{ConfigError, Error};
use crate::estimator::{excitation_level, optimal_tau, recommend_tau};
use crate::ksweep::{argmin, k_grid, sweep_k, OscillatorOracle};
use crate::lti::{eval_tf, RationalTF};
use crate::plant::make_gtilde;
use crate::powerctl::{GainCheck, OPTIMAL_K};
use crate::sim::{reference_mode, run_scenario, summarize, write_trace, ScenarioConfig, ScenarioId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "osccomp", version, about = "Power-based oscillation compensation with online harmonic estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, write its trace and print a metrics summary.
    Run(RunArgs),
    /// Recommend the estimator delay for a frequency range.
    TuneTau(TuneTauArgs),
    /// Evaluate the shaping-gain bound of the feed-forward sub-dynamics.
    GainBound(GainBoundArgs),
    /// Sweep the commutation gain on the ideal oscillator.
    SweepK(SweepKArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    /// TOML file with dotted sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override, `dotted.key=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub duration: Option<f64>,
    /// Noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneTauArgs {
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Point estimate; defaults to the dominant closed-loop frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Signal amplitude used for the excitation levels.
    #[arg(long, default_value_t = 1e-3)]
    pub amplitude: f64,
}

#[derive(Debug, Args)]
pub struct GainBoundArgs {
    /// Evaluation frequency; defaults to the dominant closed-loop frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long = "K", default_value_t = 2.4)]
    pub gain: f64,
    /// Numerator coefficients, descending powers, comma separated.
    #[arg(long, value_delimiter = ',', requires = "den", allow_hyphen_values = true)]
    pub num: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "num", allow_hyphen_values = true)]
    pub den: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SweepKArgs {
    #[arg(long, default_value_t = 0.1)]
    pub from: f64,
    #[arg(long, default_value_t = 0.5)]
    pub to: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Evaluate a single gain instead of a grid.
    #[arg(long)]
    pub point: Option<f64>,
    /// Write the `(k, ratio)` table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::TraceFormat { .. } => EXIT_IO,
        Error::NumericalBlowup { .. } => EXIT_BLOWUP,
        _ => EXIT_CONFIG,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses `args` (program name first) and executes. Diagnostics go to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32, Error> {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::TuneTau(a) => cmd_tune_tau(a, out),
        Command::GainBound(a) => cmd_gain_bound(a, out),
        Command::SweepK(a) => cmd_sweep_k(a, out),
    }
}

pub fn resolve_run_config(a: &RunArgs) -> Result<ScenarioConfig, Error> {
    let scenario = a
        .scenario
        .as_deref()
        .map(|s| {
            s.parse::<ScenarioId>().map_err(|message| ConfigError::InvalidValue {
                key: "scenario".into(),
                line: None,
                message,
            })
        })
        .transpose()?;
    let text = match &a.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(io_err(p))?),
        None => None,
    };
    let mut overrides = a.overrides.clone();
    if let Some(d) = a.duration {
        overrides.push(format!("duration={d:?}"));
    }
    if let Some(s) = a.seed {
        overrides.push(format!("noise.seed={s}"));
    }
    Ok(ScenarioConfig::resolve(scenario, text.as_deref(), &overrides)?)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let cfg = resolve_run_config(a)?;
    let trace = run_scenario(&cfg)?;
    std::fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let trace_path = a.out.join(format!("{}.csv", cfg.scenario));
    write_trace(&trace, &trace_path)?;
    let summary = summarize(&trace);
    let summary_path = a.out.join(format!("{}.summary.txt", cfg.scenario));
    std::fs::write(&summary_path, summary.to_string()).map_err(io_err(&summary_path))?;
    let w = |e| Error::Io {
        path: "<stdout>".into(),
        source: e,
    };
    write!(out, "{summary}").map_err(w)?;
    writeln!(out, "trace               {}", trace_path.display()).map_err(w)?;
    Ok(match trace.truncated_at() {
        Some(_) => EXIT_BLOWUP,
        None => EXIT_OK,
    })
}

fn default_omega() -> Result<f64, Error> {
    Ok(reference_mode(&ScenarioConfig::preset(ScenarioId::PiPlusPower))?.omega)
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn cmd_tune_tau(a: &TuneTauArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let omega = match a.omega {
        Some(w) => w,
        None => default_omega()?,
    };
    let (lo_w, hi_w) = (a.omega_min.unwrap_or(0.8 * omega), a.omega_max.unwrap_or(1.2 * omega));
    let (lo, hi) = recommend_tau(lo_w, hi_w)?;
    let best = optimal_tau(omega);
    let lines = [
        format!("omega range         [{lo_w}, {hi_w}] rad/s"),
        format!("tau interval        [{lo:.4}, {hi:.4}] s"),
        format!("tau for omega = {omega:.4}  {best:.4} s"),
        format!(
            "excitation (A = {})  {:.6e} at tau = {lo:.4}, {:.6e} at tau = {hi:.4}, {:.6e} at tau = {best:.4} (max)",
            a.amplitude,
            excitation_level(a.amplitude, omega, lo),
            excitation_level(a.amplitude, omega, hi),
            excitation_level(a.amplitude, omega, best),
        ),
    ];
    for l in lines {
        writeln!(out, "{l}").map_err(stdout_err)?;
    }
    Ok(EXIT_OK)
}

fn cmd_gain_bound(a: &GainBoundArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let tf = match (&a.num, &a.den) {
        (Some(n), Some(d)) => RationalTF::new(n.clone(), d.clone())?,
        _ => make_gtilde(),
    };
    let omega = match a.omega {
        Some(w) => w,
        None => default_omega()?,
    };
    let check = GainCheck::evaluate(&tf, omega, a.gain)?;
    let phase = eval_tf(&tf, omega)?.phase;
    let verdict = if check.passes() {
        "pass".to_string()
    } else if !check.above_lower() {
        format!("fail: K = {} violates the lower bound K > 1", a.gain)
    } else {
        format!("fail: K = {} violates the upper bound K < {:.4}", a.gain, check.k_max)
    };
    let lines = [
        format!("omega               {omega:.6} rad/s"),
        format!("|G~(j omega)|       {:.6}", check.magnitude),
        format!("arg G~(j omega)     {phase:.6} rad"),
        format!("K_max               {:.6}", check.k_max),
        format!("K                   {}", a.gain),
        format!("1 < K < K_max       {verdict}"),
    ];
    for l in lines {
        writeln!(out, "{l}").map_err(stdout_err)?;
    }
    Ok(if check.passes() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_sweep_k(a: &SweepKArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let grid = match a.point {
        Some(k) => vec![k],
        None => {
            if !(a.step > 0.0 && a.from <= a.to) {
                return Err(Error::InvalidBounds(format!(
                    "grid needs from <= to and step > 0, got [{}, {}] step {}",
                    a.from, a.to, a.step
                )));
            }
            k_grid(a.from, a.to, a.step)
        }
    };
    let points = sweep_k(&grid, &OscillatorOracle::default());
    let mut table = String::from("k,ratio\n");
    for p in &points {
        table.push_str(&format!("{},{}\n", p.k, p.ratio));
    }
    match &a.out {
        Some(path) => std::fs::write(path, &table).map_err(io_err(path))?,
        None => write!(out, "{table}").map_err(stdout_err)?,
    }
    if let Some(best) = argmin(&points) {
        writeln!(
            out,
            "argmin k = {} (ratio {:.6}); reference sqrt(3)/(2 pi) = {OPTIMAL_K:.6}",
            best.k, best.ratio
        )
        .map_err(stdout_err)?;
    }
    Ok(EXIT_OK)
}
