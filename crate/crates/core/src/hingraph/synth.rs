use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hingraph::{EdgeMode, HinGraph};
use crate::numerics::DenseMatrix;

/// Planted-partition heterogeneous generator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    pub types: usize,
    pub classes: usize,
    pub nodes_per_class: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_noise: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.types == 0 || self.classes == 0 || self.nodes_per_class == 0 {
            return Err(Error::InvalidParameter(
                "types, classes and nodes_per_class must be positive".into(),
            ));
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= p_out < p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "feature_noise must be finite and >= 0, got {}",
                self.feature_noise
            )));
        }
        Ok(())
    }

    pub fn class_of(&self, v: usize) -> usize {
        v % self.classes
    }

    /// Types cycle over blocks of `classes` consecutive nodes so that every
    /// class is spread evenly across types.
    pub fn type_of(&self, v: usize) -> usize {
        (v / self.classes) % self.types
    }
}

/// Same-class pairs connect with `p_in`, others with `p_out`. Features are
/// the one-hot class indicator plus `U(-noise, noise)` per entry.
pub fn synth_hin(params: &SynthParams) -> Result<HinGraph> {
    params.validate()?;
    let n = params.classes * params.nodes_per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if params.class_of(u) == params.class_of(v) {
                params.p_in
            } else {
                params.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((u, v, 1.0));
            }
        }
    }

    let noise = params.feature_noise;
    let features = DenseMatrix::from_fn(n, params.classes, |i, c| {
        let hot = if params.class_of(i) == c { 1.0 } else { 0.0 };
        if noise > 0.0 {
            hot + rng.random_range(-noise..=noise)
        } else {
            hot
        }
    });

    let width = params.types.saturating_sub(1).to_string().len();
    let type_names = (0..params.types).map(|t| format!("t{t:0width$}")).collect();
    HinGraph::new(
        (0..n).map(|v| params.type_of(v)).collect(),
        type_names,
        edges,
        Some(features),
        (0..n).map(|v| Some(params.class_of(v))).collect(),
        params.classes,
        EdgeMode::Unweighted,
    )
}
