//! Scenario configuration: presets, TOML files with dotted sections and
//! `key=value` overrides. Every key must exist in the preset; anything else
//! is rejected with its line.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::ConfigError;
use crate::estimator::{Discretization, EstimatorConfig, FreqUpdate};
use crate::plant::{NoiseKind, NoiseModel, PlantParams, PI_KI, PI_KP};
use crate::powerctl::PowerCtlConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    PiUnstable,
    PiPlusPower,
    SimBoundaryGains,
    SyntheticEstimation,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [
        ScenarioId::PiUnstable,
        ScenarioId::PiPlusPower,
        ScenarioId::SimBoundaryGains,
        ScenarioId::SyntheticEstimation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::PiUnstable => "pi-unstable",
            ScenarioId::PiPlusPower => "pi-plus-power",
            ScenarioId::SimBoundaryGains => "sim-boundary-gains",
            ScenarioId::SyntheticEstimation => "synthetic-estimation",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|i| i.as_str()).collect();
                format!("unknown scenario `{s}`, expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSection {
    pub coulomb: f64,
    /// Load position reference.
    pub r1: f64,
    /// Load displacement added to the equilibrium at t = 0.
    pub initial_y_offset: f64,
    pub saturation: bool,
    pub u_min: f64,
    pub u_max: f64,
    pub kp: f64,
    pub ki: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            coulomb: PlantParams::default().coulomb,
            r1: 0.01,
            initial_y_offset: 1e-3,
            saturation: false,
            u_min: 0.0,
            u_max: 10.0,
            kp: PI_KP,
            ki: PI_KI,
        }
    }
}

impl PlantSection {
    pub fn params(&self) -> PlantParams {
        PlantParams {
            coulomb: self.coulomb,
            saturation: self.saturation.then_some((self.u_min, self.u_max)),
            ..PlantParams::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSection {
    #[serde(flatten)]
    pub core: EstimatorConfig,
    /// Initial frequency guess in rad/s; non-positive derives it from the
    /// dominant closed-loop mode scaled by `1 + omega_guess_error`.
    pub omega_guess: f64,
    pub omega_guess_error: f64,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            core: EstimatorConfig::default(),
            omega_guess: 0.0,
            omega_guess_error: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSection {
    pub enabled: bool,
    #[serde(flatten)]
    pub ctl: PowerCtlConfig,
}

/// Clean test signal `Y0 + A sin(omega t + phi)` for the estimator-only run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSection {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub bias: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self {
            amplitude: 1.75e-3,
            omega: 16.27,
            phase: 0.3,
            bias: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub duration: f64,
    pub dt: f64,
    pub plant: PlantSection,
    pub noise: NoiseModel,
    pub estimator: EstimatorSection,
    pub powerctl: PowerSection,
    pub synthetic: SyntheticSection,
}

/// Amplitude/bias gain of the reference estimator tuning; see [`ScenarioConfig::preset`].
pub const TUNED_GAMMA2: f64 = 1e6;

impl ScenarioConfig {
    pub fn preset(id: ScenarioId) -> Self {
        let base = Self {
            scenario: id,
            duration: 15.0,
            dt: 5e-4,
            plant: PlantSection::default(),
            noise: NoiseModel::default(),
            estimator: EstimatorSection::default(),
            powerctl: PowerSection {
                enabled: true,
                ctl: PowerCtlConfig::default(),
            },
            synthetic: SyntheticSection::default(),
        };
        match id {
            ScenarioId::PiUnstable => Self {
                powerctl: PowerSection {
                    enabled: false,
                    ..base.powerctl
                },
                ..base
            },
            ScenarioId::PiPlusPower => base,
            ScenarioId::SimBoundaryGains => Self {
                plant: PlantSection {
                    coulomb: 0.0,
                    ..base.plant
                },
                noise: NoiseModel {
                    kind: NoiseKind::None,
                    ..base.noise
                },
                powerctl: PowerSection {
                    ctl: PowerCtlConfig {
                        gain: 1.4,
                        ..base.powerctl.ctl
                    },
                    ..base.powerctl
                },
                ..base
            },
            ScenarioId::SyntheticEstimation => Self {
                duration: 10.0 * 2.0 * std::f64::consts::PI / base.synthetic.omega,
                noise: NoiseModel {
                    kind: NoiseKind::None,
                    ..base.noise
                },
                estimator: EstimatorSection {
                    core: EstimatorConfig {
                        gamma2: TUNED_GAMMA2,
                        ..base.estimator.core
                    },
                    omega_guess: base.synthetic.omega * 1.05,
                    ..base.estimator
                },
                powerctl: PowerSection {
                    enabled: false,
                    ..base.powerctl
                },
                ..base
            },
        }
    }

    /// Builds a configuration from optional file text, then overrides.
    /// `scenario` picks the preset: an explicit argument wins over the file.
    pub fn resolve(
        scenario: Option<ScenarioId>,
        file: Option<&str>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let (file_keys, lines) = match file {
            Some(text) => parse_file(text)?,
            None => (Vec::new(), BTreeMap::new()),
        };
        let mut over_keys = Vec::new();
        for o in overrides {
            over_keys.push(parse_override(o)?);
        }
        let id = match scenario {
            Some(id) => id,
            None => {
                let from = |keys: &[(String, Value)]| {
                    keys.iter()
                        .rev()
                        .find(|(k, _)| k == "scenario")
                        .map(|(_, v)| v.clone())
                };
                match from(&over_keys).or_else(|| from(&file_keys)) {
                    Some(Value::String(s)) => s.parse().map_err(|m| ConfigError::InvalidValue {
                        key: "scenario".into(),
                        line: lines.get("scenario").copied(),
                        message: m,
                    })?,
                    Some(_) => {
                        return Err(ConfigError::InvalidValue {
                            key: "scenario".into(),
                            line: lines.get("scenario").copied(),
                            message: "expected a string".into(),
                        })
                    }
                    None => ScenarioId::PiPlusPower,
                }
            }
        };
        let mut cfg = Self::preset(id);
        let file_keys = file_keys.into_iter().map(|(k, v)| {
            let line = lines.get(&k).copied();
            (k, v, line)
        });
        let over_keys = over_keys.into_iter().map(|(k, v)| (k, v, None));
        for (key, value, line) in file_keys.chain(over_keys) {
            if key == "scenario" {
                continue;
            }
            cfg = cfg.with_value(&key, value, line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces one dotted key, keeping the result type-checked.
    pub fn with_value(&self, key: &str, value: Value, line: Option<usize>) -> Result<Self, ConfigError> {
        let mut table = self.to_table();
        let flat = flatten(&table);
        let current = flat
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| ConfigError::UnknownKey {
                key: key.into(),
                line,
            })?;
        let invalid = |message: String| ConfigError::InvalidValue {
            key: key.into(),
            line,
            message,
        };
        let value = match (current, value) {
            (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
            (cur, v) if cur.type_str() != v.type_str() => {
                return Err(invalid(format!("expected {}, got {}", cur.type_str(), v.type_str())))
            }
            (_, v) => v,
        };
        set_path(&mut table, key, value);
        Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| invalid(e.message().to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: &str| {
            Err(ConfigError::InvalidValue {
                key: key.into(),
                line: None,
                message: message.into(),
            })
        };
        if !(self.duration > 0.0) {
            return bad("duration", "must be positive");
        }
        if !(self.dt > 0.0) || self.dt > self.duration {
            return bad("dt", "must be positive and not exceed the duration");
        }
        if !(self.estimator.core.tau >= self.dt) {
            return bad("estimator.tau", "must be at least one sample");
        }
        if self.estimator.core.gamma1 < 0.0 || self.estimator.core.gamma2 < 0.0 {
            return bad("estimator.gamma1", "adaptation gains must be non-negative");
        }
        if !(self.noise.bound >= 0.0) {
            return bad("noise.bound", "must be non-negative");
        }
        if self.noise.seed > i64::MAX as u64 {
            return bad("noise.seed", "must fit in a signed 64-bit integer");
        }
        if self.plant.saturation && !(self.plant.u_min < self.plant.u_max) {
            return bad("plant.u_min", "must be below plant.u_max");
        }
        if let Err(m) = self.powerctl.ctl.validate() {
            return bad("powerctl", &m);
        }
        if self.scenario == ScenarioId::SyntheticEstimation && !(self.synthetic.omega > 0.0) {
            return bad("synthetic.omega", "must be positive");
        }
        Ok(())
    }

    pub fn to_table(&self) -> Table {
        match Value::try_from(self) {
            Ok(Value::Table(t)) => t,
            _ => unreachable!("scenario config serializes to a table"),
        }
    }

    /// Every effective value as `dotted.key = value`, sorted by key.
    pub fn echo(&self) -> Vec<String> {
        flatten(&self.to_table())
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn freq_update_name(&self) -> &'static str {
        match self.estimator.core.freq_update {
            FreqUpdate::Gradient => "gradient",
            FreqUpdate::FiniteTime => "finite-time",
        }
    }

    pub fn discretization_name(&self) -> &'static str {
        match self.estimator.core.discretization {
            Discretization::Euler => "euler",
            Discretization::ExactHold => "exact-hold",
        }
    }
}

/// Leaf values under dotted keys, sorted.
pub fn flatten(table: &Table) -> Vec<(String, Value)> {
    fn walk(prefix: &str, t: &Table, out: &mut Vec<(String, Value)>) {
        for (k, v) in t {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                Value::Table(inner) => walk(&key, inner, out),
                other => out.push((key, other.clone())),
            }
        }
    }
    let mut out = Vec::new();
    walk("", table, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn set_path(table: &mut Table, key: &str, value: Value) {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap_or(key);
    let mut t = table;
    for p in parts {
        t = match t.entry(p).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(inner) => inner,
            _ => unreachable!("path segments are tables"),
        };
    }
    t.insert(last.to_string(), value);
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

type KeyLines = BTreeMap<String, usize>;

/// Parses file text into dotted keys plus the line each key was written on.
fn parse_file(text: &str) -> Result<(Vec<(String, Value)>, KeyLines), ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut lines = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(head) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = head.trim().to_string();
        } else if let Some((k, _)) = line.split_once('=') {
            let k = k.trim().trim_matches('"');
            let full = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            lines.entry(full).or_insert(i + 1);
        }
    }
    Ok((flatten(&table), lines))
}

/// `dotted.key=value`; the value is read as TOML, or as a bare string.
pub fn parse_override(raw: &str) -> Result<(String, Value), ConfigError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError::MalformedOverride(raw.into()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::MalformedOverride(raw.into()));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}
