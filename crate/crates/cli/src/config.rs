//! Experiment configuration: a single JSON document per run.

use std::fs;
use std::path::{Path, PathBuf};

use qae_core::ising::{random_instance, CouplingDistribution, IsingInstance};
use qae_core::schedules::ScheduleSpec;
use qae_core::{QaeError, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_ENV: &str = "QAE_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used as the schedule id in results; defaults to `kind@scale`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub instance: InstanceSource,
    pub engine: EngineConfig,
    pub schedule: ScheduleSpec,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    /// Path to an instance JSON file, relative to the config file.
    File(PathBuf),
    Generate {
        n: usize,
        #[serde(default = "default_distribution")]
        distribution: CouplingDistribution,
        seed: u64,
    },
    Inline(IsingInstance),
}

fn default_distribution() -> CouplingDistribution {
    CouplingDistribution::PlusMinusJ
}

/// `{"kind": "pimc" | "gfmc" | "sa" | "lab", ...engine parameters}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub kind: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl EngineConfig {
    pub fn new(kind: &str, params: serde_json::Value) -> Self {
        let params = match params {
            serde_json::Value::Object(map) => map,
            _ => serde_json::Map::new(),
        };
        EngineConfig { kind: kind.into(), params }
    }

    /// Decode the engine-specific parameter block, naming the offending key on error.
    pub fn decode<T: DeserializeOwned>(&self) -> Result<T> {
        let value = serde_json::Value::Object(self.params.clone());
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            QaeError::Configuration(format!("engine.{path}: {}", e.inner()))
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plots: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            QaeError::Configuration(format!(
                "line {}, column {}, key '{}': {}",
                inner.line(),
                inner.column(),
                path,
                inner
            ))
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Read and parse; `file` instance paths are resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| QaeError::Configuration(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            QaeError::Configuration(msg) => QaeError::Configuration(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let InstanceSource::File(file) = &mut config.instance {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
            if !file.exists() {
                return Err(QaeError::Configuration(format!("instance file {} does not exist", file.display())));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(QaeError::Configuration("seeds must not be empty".into()));
        }
        if self.horizon == 0 {
            return Err(QaeError::Configuration("horizon must be at least 1".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(QaeError::Configuration("checkpoint_every must be at least 1".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(QaeError::Configuration("seeds must be distinct".into()));
        }
        Ok(())
    }

    pub fn schedule_id(&self) -> String {
        match &self.name {
            Some(name) => name.clone(),
            None => format!("{}@{}", self.schedule.kind, self.schedule.scale),
        }
    }

    /// `QAE_OUT` if set, else `output.dir`, else `./qae_out`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone().unwrap_or_else(|| PathBuf::from("qae_out")),
        }
    }
}

impl InstanceSource {
    pub fn resolve(&self) -> Result<IsingInstance> {
        match self {
            InstanceSource::File(path) => read_instance(path),
            InstanceSource::Generate { n, distribution, seed } => random_instance(*n, *distribution, *seed),
            InstanceSource::Inline(instance) => Ok(instance.clone()),
        }
    }
}

pub fn read_instance(path: &Path) -> Result<IsingInstance> {
    let text = fs::read_to_string(path)
        .map_err(|e| QaeError::Configuration(format!("cannot read instance {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path_str = e.path().to_string();
        let inner = e.into_inner();
        QaeError::Configuration(format!(
            "{}: line {}, column {}, key '{}': {}",
            path.display(),
            inner.line(),
            inner.column(),
            path_str,
            inner
        ))
    })
}
