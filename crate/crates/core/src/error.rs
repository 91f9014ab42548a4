use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transfer function has a pole on the imaginary axis at omega = {omega} rad/s")]
    PoleOnAxis { omega: f64 },

    #[error("resolvent (j*omega*I - A) is numerically singular at omega = {omega} rad/s")]
    SingularResolvent { omega: f64 },

    #[error("system matrix has no complex-conjugate eigenvalue pair")]
    NoOscillatoryMode,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("state magnitude exceeded {limit:e} at t = {t} s")]
    NumericalBlowup { t: f64, limit: f64 },

    #[error("delay line does not span 3*tau yet")]
    NotReady,

    #[error("invalid frequency bounds: {0}")]
    InvalidBounds(String),

    #[error("omega_hat = {omega} rad/s is at or below the floor {floor} rad/s")]
    FrequencyTooLow { omega: f64, floor: f64 },

    #[error("window holds {found} half-periods, at least {needed} required")]
    InsufficientPeriods { found: usize, needed: usize },

    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("trace format error at line {line}: {message}")]
    TraceFormat { line: usize, message: String },

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{key}`{}", line_suffix(*.line))]
    UnknownKey { key: String, line: Option<usize> },

    #[error("invalid value for `{key}`{}: {message}", line_suffix(*.line))]
    InvalidValue {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error("syntax error{}: {message}", line_suffix(*.line))]
    Syntax { line: Option<usize>, message: String },

    #[error("malformed override `{0}`, expected dotted.key=value")]
    MalformedOverride(String),
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
