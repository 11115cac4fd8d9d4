//! Discriminative heterogeneous network embedding.
//!
//! Two convolutional layers run separately on every sub-network, each
//! computing `ReLU(Σ_{k=1..K} P_tᵏ Z_t Θ_t)`; the per-sub-network outputs are
//! concatenated (zero blocks for non-members) to form the next layer's input.
//! A dense softmax head maps the final embedding to class probabilities.

mod backward;
mod checkpoint;
mod forward;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hingraph::SubNetwork;
use crate::numerics::{AdamParams, AdamState, DenseMatrix};

pub use backward::{backward, loss, Gradients};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use forward::{concat_signals, conv_layer_forward, forward, ForwardCache, ForwardOutput};
pub use train::{predict, train, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DhneConfig {
    /// Polynomial order `K` of the propagation filter.
    pub order: usize,
    /// Width of the first convolutional layer.
    pub hidden: usize,
    /// Width of the second convolutional layer; the class count when unset.
    pub output_width: Option<usize>,
    pub l2: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Stop when validation loss has not improved for this many epochs.
    pub early_stopping: Option<usize>,
    /// Add unit self-loops to every sub-network before normalization.
    pub self_loops: bool,
    pub seed: u64,
}

impl Default for DhneConfig {
    fn default() -> Self {
        Self {
            order: 1,
            hidden: 16,
            output_width: None,
            l2: 5e-4,
            dropout: 0.5,
            epochs: 200,
            learning_rate: 0.01,
            early_stopping: None,
            self_loops: false,
            seed: 0,
        }
    }
}

impl DhneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.order == 0 {
            return bad("order K must be >= 1".into());
        }
        if self.hidden == 0 || self.output_width == Some(0) {
            return bad("layer widths must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be finite and >= 0, got {}", self.l2));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.early_stopping == Some(0) {
            return bad("early stopping window must be >= 1".into());
        }
        Ok(())
    }

    pub fn output_width_for(&self, num_classes: usize) -> usize {
        self.output_width.unwrap_or(num_classes)
    }
}

/// Weights and optimizer state.
///
/// `conv[0][t]` is `D × d1`, `conv[1][t]` is `(T·d1) × d2` and `head` is
/// `(T·d2) × C`.
#[derive(Debug, Clone)]
pub struct DhneModel {
    config: DhneConfig,
    num_classes: usize,
    input_dim: usize,
    conv: [Vec<DenseMatrix>; 2],
    head: DenseMatrix,
    adam_conv: [Vec<AdamState>; 2],
    adam_head: AdamState,
    /// Bumped on every weight mutation; forward caches record it.
    version: u64,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// Glorot-uniform weights drawn in the order conv0[0..T], conv1[0..T], head.
pub fn init_model(
    cfg: &DhneConfig,
    subnets: &[SubNetwork],
    input_dim: usize,
    num_classes: usize,
) -> Result<DhneModel> {
    cfg.validate()?;
    let t = subnets.len();
    if t == 0 {
        return Err(Error::InvalidParameter(
            "graph has no edges, so there are no sub-networks to convolve".into(),
        ));
    }
    if num_classes == 0 || input_dim == 0 {
        return Err(Error::InvalidParameter(
            "need at least one class and one feature".into(),
        ));
    }
    let d1 = cfg.hidden;
    let d2 = cfg.output_width_for(num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let conv0: Vec<DenseMatrix> = (0..t).map(|_| glorot(input_dim, d1, &mut rng)).collect();
    let conv1: Vec<DenseMatrix> = (0..t).map(|_| glorot(t * d1, d2, &mut rng)).collect();
    let head = glorot(t * d2, num_classes, &mut rng);

    let adam = AdamParams {
        learning_rate: cfg.learning_rate,
        ..AdamParams::default()
    };
    let state = |m: &DenseMatrix| AdamState::new(m.rows(), m.cols(), adam);
    Ok(DhneModel {
        config: cfg.clone(),
        num_classes,
        input_dim,
        adam_conv: [
            conv0.iter().map(state).collect(),
            conv1.iter().map(state).collect(),
        ],
        adam_head: state(&head),
        conv: [conv0, conv1],
        head,
        version: 0,
    })
}

impl DhneModel {
    pub fn config(&self) -> &DhneConfig {
        &self.config
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_subnets(&self) -> usize {
        self.conv[0].len()
    }

    pub fn hidden_width(&self) -> usize {
        self.conv[0][0].cols()
    }

    pub fn output_width(&self) -> usize {
        self.conv[1][0].cols()
    }

    /// Embedding width `T · d2`.
    pub fn embedding_width(&self) -> usize {
        self.num_subnets() * self.output_width()
    }

    /// Weight `Θ_t^(layer)`.
    pub fn conv_weight(&self, layer: usize, t: usize) -> &DenseMatrix {
        &self.conv[layer][t]
    }

    pub fn head(&self) -> &DenseMatrix {
        &self.head
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// All weights in canonical order: conv0[..], conv1[..], head.
    pub fn weights(&self) -> impl Iterator<Item = &DenseMatrix> {
        self.conv[0]
            .iter()
            .chain(self.conv[1].iter())
            .chain(std::iter::once(&self.head))
    }

    /// Mutable weights in canonical order; invalidates outstanding caches.
    pub fn weights_mut(&mut self) -> impl Iterator<Item = &mut DenseMatrix> {
        self.version += 1;
        let [c0, c1] = &mut self.conv;
        c0.iter_mut()
            .chain(c1.iter_mut())
            .chain(std::iter::once(&mut self.head))
    }

    /// Sum of squared Frobenius norms over every weight.
    pub fn weight_norm_sq(&self) -> f64 {
        self.weights().map(DenseMatrix::frobenius_sq).sum()
    }

    pub fn num_parameters(&self) -> usize {
        self.weights().map(|w| w.values().len()).sum()
    }

    /// Flattened copy of every weight in canonical order.
    pub fn flat_parameters(&self) -> Vec<f64> {
        self.weights().flat_map(|w| w.values().iter().copied()).collect()
    }

    pub fn set_flat_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(Error::LengthMismatch {
                op: "set_flat_parameters",
                left: flat.len(),
                right: self.num_parameters(),
            });
        }
        let mut offset = 0;
        for w in self.weights_mut() {
            let n = w.values().len();
            w.values_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// One Adam step on every weight.
    pub fn apply_gradients(&mut self, grads: &Gradients) -> Result<()> {
        self.version += 1;
        for layer in 0..2 {
            for ((w, g), st) in self.conv[layer]
                .iter_mut()
                .zip(&grads.conv[layer])
                .zip(&mut self.adam_conv[layer])
            {
                crate::numerics::adam_step(w, g, st)?;
            }
        }
        crate::numerics::adam_step(&mut self.head, &grads.head, &mut self.adam_head)
    }

    pub(crate) fn from_parts(
        config: DhneConfig,
        num_classes: usize,
        input_dim: usize,
        conv: [Vec<DenseMatrix>; 2],
        head: DenseMatrix,
    ) -> Self {
        let adam = AdamParams {
            learning_rate: config.learning_rate,
            ..AdamParams::default()
        };
        let state = |m: &DenseMatrix| AdamState::new(m.rows(), m.cols(), adam);
        Self {
            adam_conv: [
                conv[0].iter().map(state).collect(),
                conv[1].iter().map(state).collect(),
            ],
            adam_head: state(&head),
            config,
            num_classes,
            input_dim,
            conv,
            head,
            version: 0,
        }
    }

    pub(crate) fn conv_layers(&self) -> &[Vec<DenseMatrix>; 2] {
        &self.conv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hingraph::{decompose, EdgeMode, HinGraph};

    pub(crate) fn two_subnet_graph() -> (HinGraph, Vec<SubNetwork>) {
        let g = HinGraph::new(
            vec![0, 0, 1, 1, 0],
            vec!["a".into(), "b".into()],
            [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
            Some(DenseMatrix::from_fn(5, 3, |i, j| ((i + 2 * j) % 3) as f64)),
            vec![Some(0), Some(1), Some(2), Some(3), None],
            4,
            EdgeMode::Unweighted,
        )
        .unwrap();
        let subs = decompose(&g);
        (g, subs)
    }

    #[test]
    fn init_shapes() {
        let (_, subs) = two_subnet_graph();
        assert_eq!(subs.len(), 3);
        let subs = &subs[..2];
        let m = init_model(&DhneConfig::default(), subs, 3, 4).unwrap();
        assert_eq!(m.conv_weight(0, 0).shape(), (3, 16));
        assert_eq!(m.conv_weight(1, 1).shape(), (32, 4));
        assert_eq!(m.head().shape(), (2 * 4, 4));
        assert_eq!(m.embedding_width(), 8);
    }

    #[test]
    fn init_deterministic() {
        let (_, subs) = two_subnet_graph();
        let a = init_model(&DhneConfig::default(), &subs, 3, 4).unwrap();
        let b = init_model(&DhneConfig::default(), &subs, 3, 4).unwrap();
        assert_eq!(a.flat_parameters(), b.flat_parameters());
        let c = init_model(&DhneConfig { seed: 1, ..Default::default() }, &subs, 3, 4).unwrap();
        assert_ne!(a.flat_parameters(), c.flat_parameters());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = glorot(100, 100, &mut rng);
        let bound = (6.0f64 / 200.0).sqrt();
        assert_eq!(w.values().len(), 10_000);
        assert!(w.values().iter().all(|v| v.abs() <= bound));
        // the draws should actually fill the range
        let max = w.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max > 0.99 * bound);
    }

    #[test]
    fn init_rejects_empty_network() {
        assert!(init_model(&DhneConfig::default(), &[], 3, 2).is_err());
        let (_, subs) = two_subnet_graph();
        assert!(init_model(&DhneConfig { order: 0, ..Default::default() }, &subs, 3, 2).is_err());
        assert!(init_model(&DhneConfig { dropout: 1.0, ..Default::default() }, &subs, 3, 2).is_err());
    }

    #[test]
    fn flat_parameter_round_trip() {
        let (_, subs) = two_subnet_graph();
        let mut m = init_model(&DhneConfig::default(), &subs, 3, 4).unwrap();
        let mut flat = m.flat_parameters();
        flat[0] = 42.0;
        let v = m.version();
        m.set_flat_parameters(&flat).unwrap();
        assert_eq!(m.conv_weight(0, 0).get(0, 0), 42.0);
        assert!(m.version() > v);
    }
}
