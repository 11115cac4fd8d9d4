//! Experiment configuration: JSON file, dotted `--set` overrides, and
//! manifests accepted in place of a config.

use std::fs;
use std::path::{Path, PathBuf};

use activehne_core::hingraph::{EdgeMode, GraphFiles, LoadOptions};
use activehne_core::{LoopConfig, SynthParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::manifest::{InputDigest, MANIFEST_FORMAT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub num_classes: Option<usize>,
    /// `"weighted"` or `"unweighted"`; inferred from the edge file if unset.
    #[serde(default)]
    pub edge_mode: Option<EdgeModeName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeModeName {
    Weighted,
    Unweighted,
}

impl DataSection {
    pub fn files(&self) -> GraphFiles {
        GraphFiles {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            features: self.features.clone(),
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            num_classes: self.num_classes,
            edge_mode: self.edge_mode.map(|m| match m {
                EdgeModeName::Weighted => EdgeMode::Weighted,
                EdgeModeName::Unweighted => EdgeMode::Unweighted,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KsweepSection {
    pub orders: Vec<usize>,
    /// Refuse any K whose estimated propagation work per forward pass
    /// (multiply-adds) exceeds this.
    pub max_propagation_cost: f64,
}

impl Default for KsweepSection {
    fn default() -> Self {
        Self {
            orders: vec![1, 2, 3],
            max_propagation_cost: 1e10,
        }
    }
}

/// Top-level experiment configuration. Exactly one of `data` and `synth`
/// names the input graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: Option<DataSection>,
    pub synth: Option<SynthParams>,
    #[serde(rename = "loop")]
    pub active: LoopConfig,
    /// Independent repetitions with master seeds `seed, seed + 1, …`.
    pub runs: usize,
    pub parallel_runs: usize,
    pub ksweep: KsweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: None,
            synth: None,
            active: LoopConfig::default(),
            runs: 1,
            parallel_runs: 1,
            ksweep: KsweepSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.data, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "config sets both `data` and `synth`; choose one".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "config needs a `data` section or a `synth` section".into(),
                ))
            }
            _ => {}
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        if self.runs == 0 {
            return Err(CliError::Config("runs must be >= 1".into()));
        }
        if self.parallel_runs == 0 {
            return Err(CliError::Config("parallel_runs must be >= 1".into()));
        }
        self.active.validate()?;
        Ok(())
    }
}

/// A parsed `--set key=value` override.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl Override {
    /// `a.b.c=value`; the value is read as JSON when it parses, otherwise
    /// as a plain string.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
        let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
        if path.iter().any(String::is_empty) {
            return Err(CliError::Config(format!("override key `{key}` is malformed")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        Ok(Self { path, value })
    }

    pub fn new(key: &str, value: Value) -> Self {
        Self {
            path: key.split('.').map(str::to_owned).collect(),
            value,
        }
    }

    pub fn apply(&self, root: &mut Value) -> Result<(), CliError> {
        let mut node = root;
        for (i, part) in self.path.iter().enumerate() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
            let Value::Object(map) = node else {
                return Err(CliError::Config(format!(
                    "override `{}`: `{}` is not an object",
                    self.key(),
                    self.path[..i].join(".")
                )));
            };
            node = map.entry(part.clone()).or_insert(Value::Null);
        }
        *node = self.value.clone();
        Ok(())
    }

    pub fn key(&self) -> String {
        self.path.join(".")
    }

    /// `key=value` with the value in compact JSON.
    pub fn describe(&self) -> String {
        format!("{}={}", self.key(), self.value)
    }
}

/// Where a configuration came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Input digests recorded by the manifest this config was read from.
    pub expected_inputs: Option<Vec<InputDigest>>,
    pub source: PathBuf,
}

/// Reads a config (or a manifest), applies overrides in order, resolves
/// data paths relative to the file and validates the result.
pub fn load_config(path: &Path, overrides: &[Override]) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut root: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: invalid JSON: {e}", path.display())))?;

    let mut expected_inputs = None;
    if root.get("format").and_then(Value::as_str) == Some(MANIFEST_FORMAT) {
        let inputs = root.get("inputs").cloned().unwrap_or(Value::Array(vec![]));
        expected_inputs = Some(
            serde_json::from_value(inputs)
                .map_err(|e| CliError::Config(format!("{}: inputs: {e}", path.display())))?,
        );
        root = root
            .get("config")
            .cloned()
            .ok_or_else(|| CliError::Config(format!("{}: manifest has no config", path.display())))?;
    }
    for o in overrides {
        o.apply(&mut root)?;
    }
    let mut config: ExperimentConfig = serde_json::from_value(root)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;

    if let Some(data) = config.data.as_mut() {
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut data.nodes);
        resolve(&mut data.edges);
        if let Some(f) = data.features.as_mut() {
            resolve(f);
        }
    }
    config.validate()?;
    Ok(LoadedConfig {
        config,
        expected_inputs,
        source: path.to_path_buf(),
    })
}
