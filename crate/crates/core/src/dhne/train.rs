use crate::dhne::backward::data_loss;
use crate::dhne::{backward, forward, loss, DhneConfig, DhneModel};
use crate::error::{Error, Result};
use crate::hingraph::{HinGraph, SubNetwork};
use crate::numerics::DenseMatrix;
use crate::seed::derive_seed;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Evaluation-mode embedding after training.
    pub embedding: DenseMatrix,
    /// Evaluation-mode class probabilities after training.
    pub probabilities: DenseMatrix,
    /// Training loss per completed epoch.
    pub loss_trace: Vec<f64>,
    /// Set when early stopping ended training before `epochs`.
    pub stopped_early: bool,
}

/// Full-batch training with Adam.
///
/// Uses `cfg.epochs`, `cfg.l2`, `cfg.early_stopping` and `cfg.seed` (which
/// drives the per-epoch dropout masks); the model keeps its own dropout rate
/// and optimizer state, so repeated calls continue from where the last left
/// off.
pub fn train(
    model: &mut DhneModel,
    graph: &HinGraph,
    subnets: &[SubNetwork],
    labeled: &[usize],
    validation: &[usize],
    cfg: &DhneConfig,
) -> Result<TrainOutcome> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    let labels = graph.labels();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::INFINITY;
    let mut since_best = 0usize;
    let mut stopped_early = false;

    for epoch in 0..cfg.epochs {
        let out = forward(model, graph, subnets, true, derive_seed(cfg.seed, epoch as u64))
            .map_err(|e| divergence(e, epoch))?;
        let value = loss(&out.probabilities, labels, labeled, model, cfg.l2)?;
        if !value.is_finite() {
            return Err(Error::Divergence { epoch, loss: value });
        }
        loss_trace.push(value);
        let grads = backward(out.cache, labels, labeled, model, subnets, cfg.l2)?;
        model
            .apply_gradients(&grads)
            .map_err(|e| divergence(e, epoch))?;

        if let (Some(window), false) = (cfg.early_stopping, validation.is_empty()) {
            let eval = forward(model, graph, subnets, false, 0).map_err(|e| divergence(e, epoch))?;
            let val = data_loss(&eval.probabilities, labels, validation)?;
            if val < best_val {
                best_val = val;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= window {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let eval = forward(model, graph, subnets, false, 0)?;
    Ok(TrainOutcome {
        embedding: eval.embedding,
        probabilities: eval.probabilities,
        loss_trace,
        stopped_early,
    })
}

fn divergence(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::Divergence {
            epoch,
            loss: f64::NAN,
        },
        other => other,
    }
}

/// Argmax class per row; ties go to the smallest class index.
pub fn predict(probabilities: &DenseMatrix) -> Vec<usize> {
    (0..probabilities.rows())
        .map(|i| {
            let row = probabilities.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
