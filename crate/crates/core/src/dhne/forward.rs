use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dhne::DhneModel;
use crate::error::{Error, Result};
use crate::hingraph::{HinGraph, SubNetwork};
use crate::numerics::{dense_matmul, relu, softmax_rows, spmm, DenseMatrix, SparseMatrix};

/// `Σ_{k=1..K} Pᵏ y`, applied as repeated sparse products.
pub(crate) fn propagate(p: &SparseMatrix, y: &DenseMatrix, order: usize) -> Result<DenseMatrix> {
    let mut acc = DenseMatrix::zeros(p.rows(), y.cols());
    let mut cur = y.clone();
    for _ in 0..order {
        cur = spmm(p, &cur)?;
        acc.add_assign(&cur)?;
    }
    Ok(acc)
}

/// `H_t = ReLU((Σ_{k=1..K} P_tᵏ Z_t) Θ)` for one sub-network.
///
/// `z_t` holds the member rows only, in local order.
pub fn conv_layer_forward(
    s: &SubNetwork,
    z_t: &DenseMatrix,
    theta: &DenseMatrix,
    order: usize,
) -> Result<DenseMatrix> {
    if z_t.rows() != s.len() {
        return Err(Error::dims("conv_layer_forward", z_t.shape(), (s.len(), theta.rows())));
    }
    let y = dense_matmul(z_t, theta)?;
    Ok(relu(&propagate(s.transition(), &y, order)?))
}

/// Scatters per-sub-network outputs into an `N × (T·d)` matrix; rows of
/// non-members stay zero in that sub-network's block.
pub fn concat_signals(
    subnets: &[SubNetwork],
    outputs: &[DenseMatrix],
    num_nodes: usize,
    width: usize,
) -> Result<DenseMatrix> {
    if outputs.len() != subnets.len() {
        return Err(Error::LengthMismatch {
            op: "concat_signals",
            left: outputs.len(),
            right: subnets.len(),
        });
    }
    let t_count = subnets.len();
    let mut z = DenseMatrix::zeros(num_nodes, t_count * width);
    for (t, (s, h)) in subnets.iter().zip(outputs).enumerate() {
        if h.cols() != width || h.rows() != s.len() {
            return Err(Error::dims("concat_signals", h.shape(), (s.len(), width)));
        }
        for (local, &global) in s.members().iter().enumerate() {
            z.row_mut(global)[t * width..(t + 1) * width].copy_from_slice(h.row(local));
        }
    }
    Ok(z)
}

/// Intermediate values needed by [`backward`](crate::dhne::backward).
#[derive(Debug)]
pub struct ForwardCache {
    pub(crate) version: u64,
    /// Layer-0 input after dropout.
    pub(crate) z0: DenseMatrix,
    /// Concatenated layer-0 outputs before dropout.
    pub(crate) z1_raw: DenseMatrix,
    /// Layer-1 input after dropout.
    pub(crate) z1: DenseMatrix,
    /// Inverted-dropout scale applied to `z1_raw`, if any.
    pub(crate) z1_mask: Option<DenseMatrix>,
    pub(crate) embedding: DenseMatrix,
    pub(crate) probabilities: DenseMatrix,
}

#[derive(Debug)]
pub struct ForwardOutput {
    /// `E = Z^(2)`, shape `N × T·d2`.
    pub embedding: DenseMatrix,
    /// Softmax class probabilities `F`, shape `N × C`.
    pub probabilities: DenseMatrix,
    pub cache: ForwardCache,
}

fn dropout(x: &DenseMatrix, rate: f64, rng: &mut ChaCha8Rng) -> (DenseMatrix, DenseMatrix) {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let mask = DenseMatrix::from_fn(x.rows(), x.cols(), |_, _| {
        if rng.random::<f64>() < keep {
            scale
        } else {
            0.0
        }
    });
    let mut out = x.clone();
    out.hadamard_assign(&mask).expect("same shape");
    (out, mask)
}

fn conv_layer(
    model: &DhneModel,
    subnets: &[SubNetwork],
    layer: usize,
    input: &DenseMatrix,
) -> Result<DenseMatrix> {
    let order = model.config().order;
    let weights = &model.conv_layers()[layer];
    let width = weights[0].cols();
    let outputs = subnets
        .iter()
        .zip(weights)
        .map(|(s, theta)| conv_layer_forward(s, &input.gather_rows(s.members()), theta, order))
        .collect::<Result<Vec<_>>>()?;
    concat_signals(subnets, &outputs, input.rows(), width)
}

/// Full forward pass. Dropout on both convolutional-layer inputs is applied
/// only when `training` is set, drawn from `seed`.
pub fn forward(
    model: &DhneModel,
    graph: &HinGraph,
    subnets: &[SubNetwork],
    training: bool,
    seed: u64,
) -> Result<ForwardOutput> {
    if subnets.len() != model.num_subnets() {
        return Err(Error::LengthMismatch {
            op: "forward sub-network count",
            left: subnets.len(),
            right: model.num_subnets(),
        });
    }
    let x = graph.features();
    if x.cols() != model.input_dim() {
        return Err(Error::dims("forward features", x.shape(), (x.rows(), model.input_dim())));
    }
    let rate = model.config().dropout;
    let use_dropout = training && rate > 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let z0 = if use_dropout {
        dropout(x, rate, &mut rng).0
    } else {
        x.clone()
    };
    let z1_raw = conv_layer(model, subnets, 0, &z0)?;
    let (z1, z1_mask) = if use_dropout {
        let (z, m) = dropout(&z1_raw, rate, &mut rng);
        (z, Some(m))
    } else {
        (z1_raw.clone(), None)
    };
    let embedding = conv_layer(model, subnets, 1, &z1)?;
    let probabilities = softmax_rows(&dense_matmul(&embedding, model.head())?);
    if !probabilities.is_finite() {
        return Err(Error::NonFinite("forward probabilities"));
    }

    Ok(ForwardOutput {
        embedding: embedding.clone(),
        probabilities: probabilities.clone(),
        cache: ForwardCache {
            version: model.version(),
            z0,
            z1_raw,
            z1,
            z1_mask,
            embedding,
            probabilities,
        },
    })
}
