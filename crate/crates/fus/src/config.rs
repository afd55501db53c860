//! Run configuration.
//!
//! Values resolve in three layers: built-in defaults, then the JSON config
//! file, then command-line flags. Flags are merged into the JSON document
//! before it is parsed, so both sources go through the same strict schema
//! and unknown keys are rejected wherever they come from.

use std::path::{Path, PathBuf};

use fus_core::metrics::DEFAULT_COVERAGE_RADIUS;
use fus_core::sampler::{SamplerConfig, Strategy};
use fus_core::simulator::{
    build_scene_with, generate_sequence, NoiseSpec, ObjectKind, SceneOptions, SceneSequence,
    DEFAULT_REFERENCE_SPACING,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Seeds used when neither the config nor the flags name any: enough for the
/// mean and spread of per-seed metrics to settle.
pub const DEFAULT_SEED_COUNT: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One synthetic scene to generate per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEntry {
    pub kind: ObjectKind,
    #[serde(default)]
    pub options: SceneOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenes: Vec<SceneEntry>,
    pub noise: NoiseSpec,
    /// `sampler.inferences` also sets how many stochastic inferences the
    /// simulator produces per frame.
    pub sampler: SamplerConfig,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    /// Spacing of the reference surface samples used by shape metrics, m.
    pub reference_spacing: f64,
    pub coverage_radius: f64,
    /// Existing sequence directories to compare on, in addition to `scenes`.
    pub sequences: Vec<PathBuf>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub workers: usize,
    #[serde(skip_serializing)]
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenes: Vec::new(),
            noise: NoiseSpec::default(),
            sampler: SamplerConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            reference_spacing: DEFAULT_REFERENCE_SPACING,
            coverage_radius: DEFAULT_COVERAGE_RADIUS,
            sequences: Vec::new(),
            out: None,
            workers: 1,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    /// Parses a config document after overlaying `overrides`.
    pub fn resolve(document: Option<Value>, overrides: Map<String, Value>) -> Result<Self> {
        let mut doc = match document.unwrap_or_else(|| Value::Object(Map::new())) {
            Value::Object(m) => m,
            _ => return Err(Error::Config("top level must be a JSON object".into())),
        };
        merge(&mut doc, overrides);
        let cfg: RunConfig =
            serde_json::from_value(Value::Object(doc)).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Value> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: fus_core::Error| Error::Config(e.to_string());
        self.sampler.validate().map_err(invalid)?;
        self.noise.validate().map_err(invalid)?;
        if !(self.reference_spacing > 0.0) {
            return Err(Error::Config("reference_spacing must be positive".into()));
        }
        if !(self.coverage_radius > 0.0) {
            return Err(Error::Config("coverage_radius must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// The single scene a `generate` run produces.
    pub fn generation(&self) -> Result<Generation> {
        let scene = match self.scenes.as_slice() {
            [one] => one.clone(),
            [] => {
                return Err(Error::Config(
                    "missing field `scenes` (or --kind): nothing to generate".into(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "generate takes exactly one entry in `scenes`".into(),
                ))
            }
        };
        let seed = *self
            .seeds
            .first()
            .ok_or_else(|| Error::Config("`seeds` is empty".into()))?;
        Ok(Generation {
            scene,
            seed,
            noise: self.noise,
            inferences: self.sampler.inferences,
            reference_spacing: self.reference_spacing,
        })
    }
}

/// Everything that determines a generated sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generation {
    pub scene: SceneEntry,
    pub seed: u64,
    pub noise: NoiseSpec,
    pub inferences: usize,
    pub reference_spacing: f64,
}

impl Generation {
    pub fn sequence(&self) -> Result<SceneSequence> {
        let spec = build_scene_with(self.scene.kind, self.seed, &self.scene.options);
        Ok(generate_sequence(
            &spec,
            &self.noise,
            self.inferences,
            self.seed,
            self.reference_spacing,
        )?)
    }
}

/// Recursive object merge; `patch` wins.
fn merge(base: &mut Map<String, Value>, patch: Map<String, Value>) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(p)) => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
