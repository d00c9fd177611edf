//! Assembly of model parameters, states and sweep configs from files and flags.
//! Flags always override values read from files.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde_json::{json, Map, Value};
use splaylab::{ModelParams, PhaseConfiguration, SplayState};

/// An error in the user's input; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Ks,
    Inertia,
    Adaptive,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Ks => "ks",
            ModelKind::Inertia => "inertia",
            ModelKind::Adaptive => "adaptive",
        }
    }

    pub fn natural_moment(self) -> u32 {
        if self == ModelKind::Adaptive {
            2
        } else {
            1
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Natural frequency (ks, adaptive)
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Phase lag
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Phase lag of the adaptation rule (adaptive)
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Damping (inertia)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Coupling strength
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Adaptation rate (adaptive)
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Power input (inertia)
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Inertia (inertia)
    #[arg(long)]
    pub m_inertia: Option<f64>,
}

impl ParamArgs {
    fn entries(&self) -> Vec<(&'static str, f64)> {
        [
            ("omega", self.omega),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
            ("epsilon", self.epsilon),
            ("p", self.p),
            ("m_inertia", self.m_inertia),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

/// Parameter object: the file's `model` object (if any), then `kind`, then flags.
pub fn param_map(kind: Option<ModelKind>, file_model: Option<&Value>, flags: &ParamArgs) -> Result<Map<String, Value>> {
    let mut map = match file_model {
        Some(Value::Object(m)) => m.clone(),
        Some(other) => return Err(usage(format!("'model' must be an object, got {other}"))),
        None => Map::new(),
    };
    if let Some(kind) = kind {
        if map.get("kind").and_then(Value::as_str) != Some(kind.tag()) {
            // switching model kind drops parameters of the other kind
            map.clear();
            map.insert("kind".into(), json!(kind.tag()));
        }
    }
    for (k, v) in flags.entries() {
        map.insert(k.into(), json!(v));
    }
    Ok(map)
}

/// Complete model parameters. `omega` and `p` only shift the collective
/// frequency and default to 0.
pub fn build_params(map: &Map<String, Value>) -> Result<ModelParams> {
    let mut map = map.clone();
    let kind = map
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| usage("no model given (use --model or a state file with a model object)"))?
        .to_string();
    if kind == "ks" || kind == "adaptive" {
        map.entry("omega").or_insert(json!(0.0));
    }
    if kind == "inertia" {
        map.entry("p").or_insert(json!(0.0));
    }
    let params: ModelParams =
        serde_json::from_value(Value::Object(map)).map_err(|e| usage(format!("model parameters: {e}")))?;
    params.validate().map_err(|e| usage(e.to_string()))?;
    Ok(params)
}

/// A state file: `{"phases": [...], "m": ..., "model": {...}}`; only `phases` is required.
pub struct StateFile {
    pub phases: Vec<f64>,
    pub m: Option<u32>,
    pub model: Option<Value>,
}

pub fn read_state_file(path: &Path) -> Result<StateFile> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let phases = v
        .get("phases")
        .and_then(Value::as_array)
        .ok_or_else(|| usage(format!("{}: missing 'phases' array", path.display())))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| usage("phases must be numbers")))
        .collect::<Result<Vec<f64>>>()?;
    let m = v.get("m").and_then(Value::as_u64).map(|m| m as u32);
    Ok(StateFile {
        phases,
        m,
        model: v.get("model").cloned(),
    })
}

pub fn splay_from_phases(phases: Vec<f64>, m: u32, tol: f64) -> Result<SplayState> {
    let theta = PhaseConfiguration::new(phases).map_err(|e| usage(e.to_string()))?;
    SplayState::new(theta, m, tol).map_err(|e| usage(e.to_string()))
}

/// Parse `name=min:max:count`.
pub fn parse_axis(s: &str) -> Result<Value> {
    let bad = || usage(format!("axis '{s}' is not of the form name=min:max:count"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(json!({"name": name.trim(), "min": min, "max": max, "count": count}))
}

/// Parse `name=value`.
pub fn parse_fixed(s: &str) -> Result<(String, f64)> {
    let bad = || usage(format!("fixed parameter '{s}' is not of the form name=value"));
    let (name, value) = s.split_once('=').ok_or_else(bad)?;
    Ok((name.trim().to_string(), value.trim().parse().map_err(|_| bad())?))
}

pub fn read_json_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| usage(format!("{e:#}")))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}
