//! Experiment configuration: a JSON document with a fixed envelope and
//! experiment-specific `params`. Unknown keys are rejected at every level.

use std::path::PathBuf;

use memlab_core::dynamics::Readout;
use memlab_core::exact::RateLaw;
use memlab_core::lattice::ModelKind;
use memlab_core::thermo::{MeasurementCost, DEFAULT_GAMMA};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    IsingLifetime,
    KitaevLifetime,
    Gap,
    Szilard,
    Cycle,
    Fluctuation,
    ToolkitCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    experiment: Experiment,
    output: PathBuf,
    seed: u64,
    #[serde(default)]
    workers: Option<usize>,
    params: Value,
}

/// A parsed, typed configuration plus its JSON echo for the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub output: PathBuf,
    pub seed: u64,
    pub workers: Option<usize>,
    pub params: Params,
    pub echo: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Params {
    IsingLifetime(IsingLifetimeParams),
    KitaevLifetime(KitaevLifetimeParams),
    Gap(GapParams),
    Szilard(SzilardParams),
    Cycle(CycleParams),
    Fluctuation(FluctuationParams),
    ToolkitCheck(ToolkitParams),
}

fn one() -> f64 {
    1.0
}

fn default_t_max() -> f64 {
    1e9
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingLifetimeParams {
    pub model: ModelKind,
    pub sizes: Vec<usize>,
    pub betas: Vec<f64>,
    #[serde(default = "one")]
    pub coupling: f64,
    pub n_traj: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KitaevLifetimeParams {
    pub sizes: Vec<usize>,
    pub betas: Vec<f64>,
    pub n_traj: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    pub readout: Readout,
    #[serde(default)]
    pub probe_cadence: Option<f64>,
    #[serde(default = "one")]
    pub move_rate: f64,
    #[serde(default = "default_exact_limit")]
    pub exact_limit: usize,
}

fn default_exact_limit() -> usize {
    memlab_core::decoder::EXACT_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapParams {
    pub model: ModelKind,
    pub sizes: Vec<usize>,
    pub betas: Vec<f64>,
    #[serde(default = "one")]
    pub coupling: f64,
}

/// Energies are given in units of kT through `beta_e = βE_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SzilardParams {
    #[serde(default = "one")]
    pub beta: f64,
    pub beta_e: Vec<f64>,
    pub ramp_times: Vec<f64>,
    pub p_init: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub rate_law: RateLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeMemory {
    pub t_cycle: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleParams {
    #[serde(default = "one")]
    pub beta: f64,
    pub beta_e: Vec<f64>,
    pub ramp_times: Vec<f64>,
    #[serde(default)]
    pub error_probabilities: Vec<f64>,
    /// Memories whose error probability follows from a finite lifetime.
    #[serde(default)]
    pub lifetimes: Vec<LifetimeMemory>,
    #[serde(default)]
    pub measurement: MeasurementCost,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub rate_law: RateLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationParams {
    /// Peak of the triangle drive on the upper level.
    pub amplitude: f64,
    pub period: f64,
    pub cycles: Vec<usize>,
    pub n_traj: usize,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub rate_law: RateLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolkitParams {
    pub n_pairs: usize,
    pub dims: Vec<usize>,
    #[serde(default = "default_flip")]
    pub flip_probability: f64,
}

fn default_flip() -> f64 {
    0.1
}

/// Applies `path.to.key=value` to a JSON document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, spec: &str) -> CliResult<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let map = node.as_object_mut().ok_or_else(|| {
            CliError::Config(format!(
                "override `{path}`: `{key}` is not inside an object"
            ))
        })?;
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::Config("empty override key".into()))
}

fn typed<T: serde::de::DeserializeOwned>(v: Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("params: {e}")))
}

pub fn parse_config(text: &str, overrides: &[String]) -> CliResult<ExperimentConfig> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let env: Envelope =
        serde_json::from_value(doc.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let params = match env.experiment {
        Experiment::IsingLifetime => Params::IsingLifetime(typed(env.params)?),
        Experiment::KitaevLifetime => Params::KitaevLifetime(typed(env.params)?),
        Experiment::Gap => Params::Gap(typed(env.params)?),
        Experiment::Szilard => Params::Szilard(typed(env.params)?),
        Experiment::Cycle => Params::Cycle(typed(env.params)?),
        Experiment::Fluctuation => Params::Fluctuation(typed(env.params)?),
        Experiment::ToolkitCheck => Params::ToolkitCheck(typed(env.params)?),
    };
    if env.workers == Some(0) {
        return Err(CliError::Config("workers must be >= 1".into()));
    }
    Ok(ExperimentConfig {
        output: env.output,
        seed: env.seed,
        workers: env.workers,
        params,
        echo: doc,
    })
}
