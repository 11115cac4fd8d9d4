use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dhne::{DhneConfig, DhneModel};
use crate::error::{Error, Result};
use crate::hingraph::{subnetwork_fingerprint, SubNetwork};
use crate::numerics::DenseMatrix;

const FORMAT: &str = "activehne-dhne-checkpoint/1";

/// On-disk model: config echo, sub-network fingerprint and all weights.
/// Optimizer state is not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: DhneConfig,
    pub fingerprint: String,
    pub num_classes: usize,
    pub input_dim: usize,
    pub conv0: Vec<DenseMatrix>,
    pub conv1: Vec<DenseMatrix>,
    pub head: DenseMatrix,
}

pub fn save_checkpoint(model: &DhneModel, subnets: &[SubNetwork], path: &Path) -> Result<()> {
    let [c0, c1] = model.conv_layers();
    let ckpt = Checkpoint {
        format: FORMAT.into(),
        config: model.config().clone(),
        fingerprint: subnetwork_fingerprint(subnets),
        num_classes: model.num_classes(),
        input_dim: model.input_dim(),
        conv0: c0.clone(),
        conv1: c1.clone(),
        head: model.head().clone(),
    };
    let json = serde_json::to_string(&ckpt)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint, refusing it unless it was saved against the same
/// sub-network decomposition.
pub fn load_checkpoint(path: &Path, subnets: &[SubNetwork]) -> Result<DhneModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.format != FORMAT {
        return Err(Error::InvalidParameter(format!(
            "unsupported checkpoint format `{}`",
            ckpt.format
        )));
    }
    let expected = subnetwork_fingerprint(subnets);
    if ckpt.fingerprint != expected {
        return Err(Error::FingerprintMismatch {
            expected,
            found: ckpt.fingerprint,
        });
    }
    let t = subnets.len();
    let d1 = ckpt.config.hidden;
    let d2 = ckpt.config.output_width_for(ckpt.num_classes);
    let shapes_ok = ckpt.conv0.len() == t
        && ckpt.conv1.len() == t
        && ckpt.conv0.iter().all(|w| w.shape() == (ckpt.input_dim, d1))
        && ckpt.conv1.iter().all(|w| w.shape() == (t * d1, d2))
        && ckpt.head.shape() == (t * d2, ckpt.num_classes);
    let finite = ckpt.conv0.iter().chain(&ckpt.conv1).all(DenseMatrix::is_finite)
        && ckpt.head.is_finite();
    // values of a deserialized DenseMatrix bypass from_vec, so recheck length
    let lengths_ok = ckpt
        .conv0
        .iter()
        .chain(&ckpt.conv1)
        .chain(std::iter::once(&ckpt.head))
        .all(|w| w.values().len() == w.rows() * w.cols());
    if !(shapes_ok && finite && lengths_ok) {
        return Err(Error::InvalidParameter(
            "checkpoint weights have inconsistent shapes or non-finite values".into(),
        ));
    }
    Ok(DhneModel::from_parts(
        ckpt.config,
        ckpt.num_classes,
        ckpt.input_dim,
        [ckpt.conv0, ckpt.conv1],
        ckpt.head,
    ))
}
