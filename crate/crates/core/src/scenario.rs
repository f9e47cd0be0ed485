//! Scenario files and the built-in presets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostError, CostWeights};
use crate::model::{EpidemicParams, EpidemicState, ModelError, DEFAULT_STEP};

pub const SCHEMA_VERSION: u32 = 1;

/// Names accepted by [`Scenario::preset`].
pub const PRESETS: [&str; 2] = ["italy-2020", "delta-2021"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown preset '{name}'; available presets: {}", PRESETS.join(", "))]
    UnknownPreset { name: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("unsupported schema_version {found}, expected {SCHEMA_VERSION}")]
    SchemaVersion { found: u32 },
    #[error("field '{field}': {message}")]
    Field { field: &'static str, message: String },
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    name: String,
    beta: f64,
    gamma: f64,
    u_max: f64,
    #[serde(rename = "i_M")]
    i_max: f64,
    lambda1: f64,
    lambda2: f64,
    s0: f64,
    i0: f64,
    horizon: f64,
    step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub params: EpidemicParams,
    pub weights: CostWeights,
    pub state0: EpidemicState,
    /// Plotting window and search range, days.
    pub horizon: f64,
    /// Integration step, days.
    pub step: f64,
}

impl Scenario {
    /// Built-in scenario by name.
    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        let (params, state0, lambda2, horizon) = match name {
            "italy-2020" => (EpidemicParams::italy_2020(), EpidemicState { s: 0.94, i: 0.001 }, 5.0, 500.0),
            "delta-2021" => (EpidemicParams::delta_2021(), EpidemicState { s: 0.5, i: 0.001 }, 30.0, 600.0),
            _ => return Err(ScenarioError::UnknownPreset { name: name.to_string() }),
        };
        Ok(Self {
            name: name.to_string(),
            params,
            weights: CostWeights { lambda1: 1.0, lambda2 },
            state0,
            horizon,
            step: DEFAULT_STEP,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion { found: file.schema_version });
        }
        let scenario = Self {
            name: file.name,
            params: EpidemicParams { beta: file.beta, gamma: file.gamma, u_max: file.u_max, i_max: file.i_max },
            weights: CostWeights { lambda1: file.lambda1, lambda2: file.lambda2 },
            state0: EpidemicState { s: file.s0, i: file.i0 },
            horizon: file.horizon,
            step: file.step,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        let file = ScenarioFile {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            beta: self.params.beta,
            gamma: self.params.gamma,
            u_max: self.params.u_max,
            i_max: self.params.i_max,
            lambda1: self.weights.lambda1,
            lambda2: self.weights.lambda2,
            s0: self.state0.s,
            i0: self.state0.i,
            horizon: self.horizon,
            step: self.step,
        };
        Ok(toml::to_string(&file)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let text = self.to_toml_string()?;
        std::fs::write(path, text).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.params.validate().map_err(|e| {
            let field = match &e {
                ModelError::InvalidParams(m) if m.starts_with("beta") => "beta",
                ModelError::InvalidParams(m) if m.starts_with("gamma") => "gamma",
                ModelError::InvalidParams(m) if m.starts_with("u_max") => "u_max",
                ModelError::InvalidParams(m) if m.starts_with("i_M") => "i_M",
                _ => "params",
            };
            ScenarioError::Field { field, message: e.to_string() }
        })?;
        self.weights.validate().map_err(|e| {
            let field = match &e {
                CostError::InvalidWeights(m) if m.starts_with("lambda1") => "lambda1",
                _ => "lambda2",
            };
            ScenarioError::Field { field, message: e.to_string() }
        })?;
        if !self.state0.in_triangle() {
            return Err(ScenarioError::Field {
                field: "s0",
                message: format!(
                    "initial state (s0={}, i0={}) must satisfy s0 > 0, i0 > 0, s0 + i0 <= 1",
                    self.state0.s, self.state0.i
                ),
            });
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ScenarioError::Field {
                field: "horizon",
                message: format!("must be positive, got {}", self.horizon),
            });
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(ScenarioError::Field {
                field: "step",
                message: format!("must be positive, got {}", self.step),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            Scenario::preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = Scenario::preset("wuhan").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("italy-2020") && text.contains("delta-2021"), "{text}");
    }

    #[test]
    fn toml_round_trip() {
        let scenario = Scenario::preset("delta-2021").unwrap();
        let text = scenario.to_toml_string().unwrap();
        assert!(text.contains("i_M = 0.021"));
        assert_eq!(Scenario::from_toml_str(&text).unwrap(), scenario);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let good = Scenario::preset("italy-2020").unwrap().to_toml_string().unwrap();
        let extra = format!("{good}colour = 3\n");
        assert!(matches!(Scenario::from_toml_str(&extra), Err(ScenarioError::Parse(_))));
        let bad = good.replace("u_max = 0.135", "u_max = 0.5");
        match Scenario::from_toml_str(&bad) {
            Err(ScenarioError::Field { field, .. }) => assert_eq!(field, "u_max"),
            other => panic!("unexpected {other:?}"),
        }
        let old = good.replace("schema_version = 1", "schema_version = 7");
        assert!(matches!(Scenario::from_toml_str(&old), Err(ScenarioError::SchemaVersion { found: 7 })));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Scenario::from_toml_str("schema_version = 1\nname = \"x\"\nbeta = oops\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
