//! JSON experiment files.
//!
//! ```json
//! {
//!   "model":    { "mu": [0.5, 0.3], "theta": [1, 1], "alpha": 1.0, "horizon": 30000 },
//!   "policies": [ { "name": "ucb", "gamma": 3 }, { "name": "be", "beta": 2 } ],
//!   "run":      { "replications": 100, "base_seed": 7, "oracle_replications": 1000,
//!                 "sweep": { "horizons": [1000, 3000, 10000] } },
//!   "output":   { "directory": "out", "formats": ["csv", "json", "svg"] }
//! }
//! ```
//!
//! Unknown keys are rejected everywhere. `model` takes either `alpha`
//! (`f(x) = x^α`) or a named function `f`, never both. Any scalar can be
//! overridden before validation with a dotted path (`run.replications=500`,
//! `model.mu.1=0.2`).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::env::{Externality, ModelConfig};
use crate::error::{Error, Result};
use crate::harness::{SweepSpec, MIN_ORACLE_REPLICATIONS};
use crate::policies::PolicyDescriptor;

const DEFAULT_ORACLE_REPLICATIONS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub policies: Vec<PolicyDescriptor>,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<NamedExternality>,
    #[serde(alias = "T")]
    pub horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedExternality {
    Power { alpha: f64 },
    LogPower { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub replications: u64,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_replications: Option<u64>,
    #[serde(default)]
    pub record_trajectory: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub horizons: Vec<u64>,
    #[serde(default)]
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_directory() -> String {
    "results".into()
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// A `dotted.path=value` assignment applied to the raw JSON before parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl Override {
    /// Parses `path=value`. The value is read as JSON when possible and as a
    /// bare string otherwise; arrays and objects are refused.
    pub fn parse(text: &str) -> Result<Self> {
        let (path, raw) = text
            .split_once('=')
            .ok_or_else(|| Error::config(text, "override must look like path=value"))?;
        let path = path.trim();
        if path.is_empty() || path.split('.').any(|seg| seg.is_empty()) {
            return Err(Error::config(path, "override path has an empty segment"));
        }
        let raw = raw.trim();
        let value =
            serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        if value.is_array() || value.is_object() {
            return Err(Error::config(path, "overrides accept scalar values only"));
        }
        Ok(Self {
            path: path.split('.').map(str::to_string).collect(),
            value,
        })
    }

    pub fn new(path: &str, value: Value) -> Self {
        Self {
            path: path.split('.').map(str::to_string).collect(),
            value,
        }
    }

    pub fn apply(&self, root: &mut Value) -> Result<()> {
        let dotted = self.path.join(".");
        let (last, parents) = self.path.split_last().expect("non-empty path");
        let mut node = root;
        for seg in parents {
            node = match node {
                Value::Object(map) => map
                    .entry(seg.clone())
                    .or_insert_with(|| Value::Object(Default::default())),
                Value::Array(items) => {
                    let i: usize = seg.parse().map_err(|_| {
                        Error::config(&dotted, format!("`{seg}` is not an array index"))
                    })?;
                    items
                        .get_mut(i)
                        .ok_or_else(|| Error::config(&dotted, format!("index {i} out of range")))?
                }
                _ => {
                    return Err(Error::config(
                        &dotted,
                        format!("`{seg}` is not inside an object or array"),
                    ))
                }
            };
        }
        let slot = match node {
            Value::Object(map) => map.entry(last.clone()).or_insert(Value::Null),
            Value::Array(items) => {
                let i: usize = last.parse().map_err(|_| {
                    Error::config(&dotted, format!("`{last}` is not an array index"))
                })?;
                items
                    .get_mut(i)
                    .ok_or_else(|| Error::config(&dotted, format!("index {i} out of range")))?
            }
            _ => return Err(Error::config(&dotted, "parent is not an object or array")),
        };
        if slot.is_array() || slot.is_object() {
            return Err(Error::config(
                &dotted,
                "only scalar fields can be overridden",
            ));
        }
        *slot = self.value.clone();
        Ok(())
    }
}

/// Parses and schema-checks an experiment file after applying `overrides`.
pub fn parse_config(text: &str, overrides: &[Override]) -> Result<ConfigFile> {
    let mut value: Value = serde_json::from_str(text)
        .map_err(|e| Error::config("<document>", format!("invalid JSON: {e}")))?;
    for o in overrides {
        o.apply(&mut value)?;
    }
    serde_path_to_error::deserialize::<_, ConfigFile>(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "<document>".to_string()
        } else {
            path
        };
        Error::config(path, e.into_inner().to_string())
    })
}

/// The runnable content of a checked experiment file.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub model: ModelConfig,
    pub sweep: SweepSpec,
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn validate(&self) -> Result<ValidatedConfig> {
        let model = self.model.validate()?;
        if self.policies.is_empty() {
            return Err(Error::config("policies", "at least one policy is required"));
        }
        for (i, p) in self.policies.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::config(format!("policies[{i}]"), e.to_string()))?;
        }
        let run = &self.run;
        if run.replications == 0 {
            return Err(Error::config("run.replications", "must be >= 1"));
        }
        let oracle_replications = run
            .oracle_replications
            .unwrap_or(DEFAULT_ORACLE_REPLICATIONS.max(run.replications));
        if oracle_replications < MIN_ORACLE_REPLICATIONS {
            return Err(Error::config(
                "run.oracle_replications",
                format!("must be >= {MIN_ORACLE_REPLICATIONS}"),
            ));
        }
        let grid = run.sweep.clone().unwrap_or_default();
        if let Some(i) = grid.horizons.iter().position(|&h| h == 0) {
            return Err(Error::config(
                format!("run.sweep.horizons[{i}]"),
                "must be >= 1",
            ));
        }
        if let Some(i) = grid
            .alphas
            .iter()
            .position(|a| !(a.is_finite() && *a > 0.0))
        {
            return Err(Error::config(
                format!("run.sweep.alphas[{i}]"),
                "alpha must be > 0",
            ));
        }
        if !grid.alphas.is_empty() && model.alpha().is_none() {
            return Err(Error::config(
                "run.sweep.alphas",
                "an alpha grid needs f(x) = x^alpha",
            ));
        }
        if self.output.directory.trim().is_empty() {
            return Err(Error::config("output.directory", "must not be empty"));
        }
        Ok(ValidatedConfig {
            sweep: SweepSpec {
                config: model.clone(),
                policies: self.policies.clone(),
                horizons: grid.horizons,
                alphas: grid.alphas,
                replications: run.replications,
                base_seed: run.base_seed,
                oracle_replications,
                record_trajectory: run.record_trajectory,
            },
            model,
            output: self.output.clone(),
        })
    }
}

impl ModelSection {
    pub fn validate(&self) -> Result<ModelConfig> {
        let m = self.mu.len();
        if let Some(declared) = self.m {
            if declared != m {
                return Err(Error::config(
                    "model.m",
                    format!("m = {declared} but mu has {m} entries"),
                ));
            }
        }
        if m < 2 {
            return Err(Error::config(
                "model.mu",
                format!("at least 2 arms required, got {m}"),
            ));
        }
        if let Some(i) = self.mu.iter().position(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::config(
                format!("model.mu[{i}]"),
                format!("{} is outside (0, 1]", self.mu[i]),
            ));
        }
        let top = self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if self.mu.iter().filter(|&&x| x == top).count() > 1 {
            return Err(Error::config(
                "model.mu",
                format!("a unique best arm is required; maximum {top} appears more than once"),
            ));
        }
        if self.theta.len() != m {
            return Err(Error::config(
                "model.theta",
                format!("expected {m} entries to match mu, got {}", self.theta.len()),
            ));
        }
        if let Some(i) = self.theta.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::config(
                format!("model.theta[{i}]"),
                "theta must be positive",
            ));
        }
        if self.horizon == 0 {
            return Err(Error::config("model.horizon", "must be >= 1"));
        }
        let externality = match (&self.alpha, &self.f) {
            (Some(_), Some(_)) => {
                return Err(Error::config("model", "give either alpha or f, not both"));
            }
            (None, None) => return Err(Error::config("model", "one of alpha or f is required")),
            (Some(a), None) => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::config(
                        "model.alpha",
                        format!("alpha must be > 0, got {a}"),
                    ));
                }
                Externality::power(*a)
            }
            (None, Some(NamedExternality::Power { alpha })) => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::config(
                        "model.f.alpha",
                        format!("alpha must be > 0, got {alpha}"),
                    ));
                }
                Externality::power(*alpha)
            }
            (None, Some(NamedExternality::LogPower { epsilon })) => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return Err(Error::config(
                        "model.f.epsilon",
                        format!("epsilon must be > 0, got {epsilon}"),
                    ));
                }
                Externality::LogPower { epsilon: *epsilon }
            }
        };
        ModelConfig::new(
            self.mu.clone(),
            self.theta.clone(),
            externality,
            self.horizon,
        )
        .map_err(|e| Error::config("model", e.to_string()))
    }
}
