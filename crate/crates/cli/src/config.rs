use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use weierdim::seqcore::{presets, SequenceSpec};
use weierdim::theory::synthesize;
use weierdim::weierfn::BaseTag;

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;

/// Where the sequence comes from; exactly one variant per config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecSource {
    Spec(SequenceSpec<f64>),
    Synthesis { h: f64, b: f64 },
    Preset { name: String },
}

impl SpecSource {
    pub fn resolve(&self) -> CliResult<SequenceSpec<f64>> {
        match self {
            SpecSource::Spec(s) => Ok(s.clone()),
            SpecSource::Synthesis { h, b } => Ok(synthesize(*h, *b)?),
            SpecSource::Preset { name } => preset(name),
        }
    }
}

pub fn preset(name: &str) -> CliResult<SequenceSpec<f64>> {
    match name {
        "wingren" => Ok(presets::wingren(30)),
        "liu" => Ok(presets::liu(30)),
        "lipschitz" => Ok(presets::lipschitz(40)),
        other => Err(CliError::Config(format!(
            "unknown preset {other:?} (expected wingren, liu, lipschitz)"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(flatten)]
    pub source: SpecSource,
    pub base_function: BaseTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<String>,
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
    pub seed: u64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub checks: Vec<CheckVerdict>,
    pub fitted: BTreeMap<String, f64>,
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(config: ExperimentConfig) -> Self {
        RunManifest {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            checks: Vec::new(),
            fitted: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckVerdict {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
