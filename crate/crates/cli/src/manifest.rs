use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::write_atomic;

pub const MANIFEST_FORMAT: &str = "activehne-manifest/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to repeat a run: passing this file back as `--config`
/// reproduces the outputs, after checking the inputs are unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub software_version: String,
    pub command: String,
    pub created: String,
    pub seed: u64,
    /// Overrides applied on top of the config file, in order.
    pub overrides: Vec<String>,
    pub config: ExperimentConfig,
    pub inputs: Vec<InputDigest>,
    /// Output files relative to the run directory.
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &ExperimentConfig,
        overrides: Vec<String>,
        inputs: Vec<InputDigest>,
        outputs: Vec<PathBuf>,
    ) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            software_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed: config.active.seed,
            overrides,
            config: config.clone(),
            inputs,
            outputs,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digest_inputs(paths: &[&Path]) -> Result<Vec<InputDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.to_path_buf(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Fails with a data error if any recorded input is missing or changed.
pub fn verify_inputs(expected: &[InputDigest], actual: &[InputDigest]) -> Result<(), CliError> {
    for want in expected {
        let found = actual.iter().find(|a| a.path == want.path).ok_or_else(|| {
            CliError::Data(format!("{}: recorded input is not used by this config", want.path.display()))
        })?;
        if found.sha256 != want.sha256 {
            return Err(CliError::Data(format!(
                "{}: digest {} differs from manifest digest {}",
                want.path.display(),
                found.sha256,
                want.sha256
            )));
        }
    }
    Ok(())
}
