//! Run configuration: JSON parsing, defaults and sweep paths.
//!
//! Every key is optional. Unknown keys are rejected and every error carries
//! the dotted key path of the offending value. The resolved [`RunConfig`]
//! serializes with all defaults filled in, so an echoed config parses back
//! to an equal value.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cascade::CascadeParams;
use crate::error::{Error, Result};
use crate::obe::ObeParams;
use crate::trajectory::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    LambdaBasic,
    LambdaJitter,
    PolarizationEntanglement,
    CoherentObe,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::LambdaBasic => "lambda_basic",
            Scenario::LambdaJitter => "lambda_jitter",
            Scenario::PolarizationEntanglement => "polarization_entanglement",
            Scenario::CoherentObe => "coherent_obe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Mcwf,
    Oracle,
    #[default]
    Both,
}

impl Engine {
    pub fn runs_mcwf(self) -> bool {
        matches!(self, Engine::Mcwf | Engine::Both)
    }

    pub fn runs_oracle(self) -> bool {
        matches!(self, Engine::Oracle | Engine::Both)
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcwf" => Ok(Engine::Mcwf),
            "oracle" => Ok(Engine::Oracle),
            "both" => Ok(Engine::Both),
            other => Err(Error::schema("engine", format!("expected mcwf, oracle or both, got `{other}`"))),
        }
    }
}

/// Scenario parameters; which variant applies is fixed by the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelParams {
    Cascade(CascadeParams),
    Obe(ObeParams),
}

impl ModelParams {
    pub fn cascade(&self) -> Result<&CascadeParams> {
        match self {
            ModelParams::Cascade(p) => Ok(p),
            ModelParams::Obe(_) => Err(Error::config("scenario uses OBE parameters, not cascade parameters")),
        }
    }

    pub fn obe(&self) -> Result<&ObeParams> {
        match self {
            ModelParams::Obe(p) => Ok(p),
            ModelParams::Cascade(_) => Err(Error::config("scenario uses cascade parameters, not OBE parameters")),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            ModelParams::Cascade(p) => p.check(),
            ModelParams::Obe(p) => p.check(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub master_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { n_traj: 10_000, master_seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dotted key path of a numeric config value, e.g. `params.gamma32_T`.
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: String,
    pub json: String,
    pub svg: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { csv: "results.csv".into(), json: "summary.json".into(), svg: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub engine: Engine,
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleConfig,
    pub sweep: Option<SweepConfig>,
    pub outputs: OutputConfig,
}

/// Everything except `params`, whose type depends on `scenario`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    scenario: Scenario,
    #[serde(default)]
    engine: Engine,
    #[serde(default)]
    params: Option<Value>,
    #[serde(default)]
    integrator: IntegratorConfig,
    #[serde(default)]
    ensemble: EnsembleConfig,
    #[serde(default)]
    sweep: Option<SweepConfig>,
    #[serde(default)]
    outputs: OutputConfig,
}

fn path_error<E: std::fmt::Display>(prefix: &str, err: serde_path_to_error::Error<E>) -> Error {
    let inner = err.path().to_string();
    let path = match (prefix.is_empty(), inner == ".") {
        (true, _) => inner,
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{inner}"),
    };
    Error::schema(path, err.into_inner().to_string())
}

impl RunConfig {
    /// Parses and validates a JSON config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::schema(".", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        if !value.is_object() {
            return Err(Error::schema(".", "config must be a JSON object"));
        }
        let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| path_error("", e))?;
        let params = resolve_params(raw.scenario, raw.params)?;
        let config = RunConfig {
            scenario: raw.scenario,
            engine: raw.engine,
            params,
            integrator: raw.integrator,
            ensemble: raw.ensemble,
            sweep: raw.sweep,
            outputs: raw.outputs,
        };
        config.check()?;
        Ok(config)
    }

    /// Canonical configuration for `scenario` with no sweep.
    pub fn preset(scenario: Scenario) -> Self {
        let params = resolve_params(scenario, None).expect("defaults are valid");
        RunConfig {
            scenario,
            engine: Engine::default(),
            params,
            integrator: IntegratorConfig::default(),
            ensemble: EnsembleConfig::default(),
            sweep: None,
            outputs: OutputConfig::default(),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<()> {
        self.params.check()?;
        self.integrator.check()?;
        if self.ensemble.n_traj == 0 {
            return Err(Error::schema("ensemble.n_traj", "must be at least 1"));
        }
        if self.outputs.csv.is_empty() {
            return Err(Error::schema("outputs.csv", "must not be empty"));
        }
        if self.outputs.json.is_empty() {
            return Err(Error::schema("outputs.json", "must not be empty"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::schema("sweep.values", "must contain at least one value"));
            }
            if let Some(k) = sweep.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::schema(format!("sweep.values.{k}"), "must be finite"));
            }
            let pointer = sweep_pointer(&sweep.path)?;
            match self.to_value().pointer(&pointer) {
                Some(Value::Number(_)) => {}
                Some(_) => return Err(Error::schema("sweep.path", format!("`{}` is not a numeric value", sweep.path))),
                None => return Err(Error::schema("sweep.path", format!("`{}` names no config value", sweep.path))),
            }
        }
        Ok(())
    }

    /// Sweep values, or a single `None` point when there is no sweep.
    pub fn sweep_points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    /// Copy of this config with the sweep path set to `value` and the sweep
    /// removed. The result is re-validated, so out-of-range values fail here.
    pub fn at_sweep_value(&self, value: f64) -> Result<RunConfig> {
        let sweep = self.sweep.as_ref().ok_or_else(|| Error::config("config has no sweep"))?;
        let pointer = sweep_pointer(&sweep.path)?;
        let mut doc = self.to_value();
        let slot = doc
            .pointer_mut(&pointer)
            .ok_or_else(|| Error::schema("sweep.path", format!("`{}` names no config value", sweep.path)))?;
        *slot = if slot.is_u64() && value >= 0.0 && value.fract() == 0.0 {
            Value::from(value as u64)
        } else {
            Value::from(value)
        };
        doc.as_object_mut().expect("config is an object").remove("sweep");
        RunConfig::from_value(doc).map_err(|e| match e {
            Error::Schema { path, msg } => Error::schema(path, format!("{msg} (sweep value {value})")),
            other => other,
        })
    }
}

fn sweep_pointer(path: &str) -> Result<String> {
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::schema("sweep.path", format!("malformed key path `{path}`")));
    }
    Ok(path.split('.').map(|part| format!("/{part}")).collect())
}

fn resolve_params(scenario: Scenario, raw: Option<Value>) -> Result<ModelParams> {
    let raw = raw.unwrap_or_else(|| Value::Object(Default::default()));
    if !raw.is_object() {
        return Err(Error::schema("params", "must be a JSON object"));
    }
    let has = |key: &str| raw.get(key).is_some();
    if scenario == Scenario::CoherentObe {
        let p: ObeParams = serde_path_to_error::deserialize(raw).map_err(|e| path_error("params", e))?;
        return Ok(ModelParams::Obe(p));
    }
    let (explicit_gamma30, explicit_eta_s) = (has("gamma30_S"), has("eta_S"));
    let mut p: CascadeParams = serde_path_to_error::deserialize(raw).map_err(|e| path_error("params", e))?;
    if scenario == Scenario::LambdaJitter && !explicit_gamma30 {
        p.gamma30_s = p.gamma31_s;
    }
    if scenario == Scenario::PolarizationEntanglement && !explicit_eta_s {
        p.eta_s = p.eta;
    }
    Ok(ModelParams::Cascade(p))
}
