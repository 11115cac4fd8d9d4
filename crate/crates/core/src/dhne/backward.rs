use crate::dhne::forward::{propagate, ForwardCache};
use crate::dhne::DhneModel;
use crate::error::{Error, Result};
use crate::hingraph::SubNetwork;
use crate::numerics::{matmul_nt, matmul_tn, DenseMatrix};

const LOG_FLOOR: f64 = 1e-12;

/// Gradients laid out like the model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv: [Vec<DenseMatrix>; 2],
    pub head: DenseMatrix,
}

impl Gradients {
    /// Canonical order: conv0[..], conv1[..], head.
    pub fn flatten(&self) -> Vec<f64> {
        self.conv[0]
            .iter()
            .chain(self.conv[1].iter())
            .chain(std::iter::once(&self.head))
            .flat_map(|g| g.values().iter().copied())
            .collect()
    }
}

fn check_labeled(labels: &[Option<usize>], labeled: &[usize]) -> Result<()> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    for &i in labeled {
        if labels.get(i).copied().flatten().is_none() {
            return Err(Error::Unlabeled(i));
        }
    }
    Ok(())
}

/// Summed cross-entropy over `labeled` plus `l2 · Σ ‖Θ‖²_F` over all weights.
pub fn loss(
    probabilities: &DenseMatrix,
    labels: &[Option<usize>],
    labeled: &[usize],
    model: &DhneModel,
    l2: f64,
) -> Result<f64> {
    Ok(data_loss(probabilities, labels, labeled)? + l2 * model.weight_norm_sq())
}

pub(crate) fn data_loss(
    probabilities: &DenseMatrix,
    labels: &[Option<usize>],
    labeled: &[usize],
) -> Result<f64> {
    check_labeled(labels, labeled)?;
    Ok(labeled
        .iter()
        .map(|&i| {
            let y = labels[i].expect("checked");
            -probabilities.get(i, y).max(LOG_FLOOR).ln()
        })
        .sum())
}

fn gather_block(m: &DenseMatrix, rows: &[usize], t: usize, width: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows.len(), width);
    for (local, &global) in rows.iter().enumerate() {
        out.row_mut(local)
            .copy_from_slice(&m.row(global)[t * width..(t + 1) * width]);
    }
    out
}

/// Backpropagates one convolutional layer.
///
/// `upstream` is the gradient w.r.t. this layer's concatenated output,
/// `output` the concatenated output itself (its sign gives the ReLU mask).
/// Returns the weight gradients and, when `want_input` is set, the gradient
/// w.r.t. the layer's (post-dropout) input.
fn conv_layer_backward(
    model: &DhneModel,
    subnets: &[SubNetwork],
    layer: usize,
    input: &DenseMatrix,
    output: &DenseMatrix,
    upstream: &DenseMatrix,
    l2: f64,
    want_input: bool,
) -> Result<(Vec<DenseMatrix>, Option<DenseMatrix>)> {
    let order = model.config().order;
    let weights = &model.conv_layers()[layer];
    let width = weights[0].cols();
    let mut d_input = want_input.then(|| DenseMatrix::zeros(input.rows(), input.cols()));
    let mut grads = Vec::with_capacity(subnets.len());
    for (t, (s, theta)) in subnets.iter().zip(weights).enumerate() {
        let mut d_pre = gather_block(upstream, s.members(), t, width);
        let h = gather_block(output, s.members(), t, width);
        for (d, &hv) in d_pre.values_mut().iter_mut().zip(h.values()) {
            if hv <= 0.0 {
                *d = 0.0;
            }
        }
        // pre = Σ_k Pᵏ (Z_t Θ)  =>  d(Z_t Θ) = Σ_k (Pᵀ)ᵏ d_pre
        let g = propagate(s.transition_transposed(), &d_pre, order)?;
        let z_t = input.gather_rows(s.members());
        let mut d_theta = matmul_tn(&z_t, &g)?;
        d_theta.axpy(2.0 * l2, theta)?;
        grads.push(d_theta);
        if let Some(d_in) = d_input.as_mut() {
            let d_z = matmul_nt(&g, theta)?;
            for (local, &global) in s.members().iter().enumerate() {
                for (acc, v) in d_in.row_mut(global).iter_mut().zip(d_z.row(local)) {
                    *acc += v;
                }
            }
        }
    }
    Ok((grads, d_input))
}

/// Exact gradient of [`loss`] for the forward pass recorded in `cache`.
///
/// The cache is consumed: it is valid for exactly one backward call, and is
/// rejected if the model's weights changed since it was produced.
pub fn backward(
    cache: ForwardCache,
    labels: &[Option<usize>],
    labeled: &[usize],
    model: &DhneModel,
    subnets: &[SubNetwork],
    l2: f64,
) -> Result<Gradients> {
    if cache.version != model.version() {
        return Err(Error::StaleCache);
    }
    check_labeled(labels, labeled)?;
    let f = &cache.probabilities;

    // softmax + cross-entropy: dL/dlogits = F - onehot(y) on labeled rows
    let mut d_logits = DenseMatrix::zeros(f.rows(), f.cols());
    for &i in labeled {
        let y = labels[i].expect("checked");
        if f.get(i, y) <= LOG_FLOOR {
            // clamped: the term is locally constant
            continue;
        }
        let row = d_logits.row_mut(i);
        row.copy_from_slice(f.row(i));
        row[y] -= 1.0;
    }

    let mut d_head = matmul_tn(&cache.embedding, &d_logits)?;
    d_head.axpy(2.0 * l2, model.head())?;
    let d_embedding = matmul_nt(&d_logits, model.head())?;

    let (conv1, d_z1) = conv_layer_backward(
        model,
        subnets,
        1,
        &cache.z1,
        &cache.embedding,
        &d_embedding,
        l2,
        true,
    )?;
    let mut d_z1_raw = d_z1.expect("requested");
    if let Some(mask) = &cache.z1_mask {
        d_z1_raw.hadamard_assign(mask)?;
    }
    let (conv0, _) = conv_layer_backward(
        model,
        subnets,
        0,
        &cache.z0,
        &cache.z1_raw,
        &d_z1_raw,
        l2,
        false,
    )?;

    Ok(Gradients {
        conv: [conv0, conv1],
        head: d_head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dhne::{forward, init_model, DhneConfig};
    use crate::hingraph::{decompose, EdgeMode, HinGraph};
    use crate::numerics::finite_difference_gradient;

    fn ten_node_graph() -> (HinGraph, Vec<SubNetwork>) {
        let types = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let edges = [
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7),
            (7, 8), (0, 2), (2, 4), (1, 3), (5, 7), (6, 8),
        ];
        let g = HinGraph::new(
            types,
            vec!["a".into(), "b".into()],
            edges.iter().map(|&(u, v)| (u, v, 1.0)),
            Some(DenseMatrix::from_fn(10, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0 - 0.4)),
            (0..10).map(|i| Some(i % 3)).collect(),
            3,
            EdgeMode::Unweighted,
        )
        .unwrap();
        let subs = decompose(&g);
        (g, subs)
    }

    #[test]
    fn loss_cases() {
        let (_, subs) = ten_node_graph();
        let model = init_model(&DhneConfig::default(), &subs, 4, 3).unwrap();
        let onehot = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
        let labels = [Some(0), Some(1)];
        assert_eq!(loss(&onehot, &labels, &[0, 1], &model, 0.0).unwrap(), 0.0);

        let uniform = DenseMatrix::from_fn(5, 4, |_, _| 0.25);
        let labels: Vec<Option<usize>> = (0..5).map(|i| Some(i % 4)).collect();
        let l = loss(&uniform, &labels, &[0, 1, 2, 3, 4], &model, 0.0).unwrap();
        assert!((l - 5.0 * 4.0f64.ln()).abs() < 1e-12);
        assert!((l - 6.9315).abs() < 1e-4);

        let reg = loss(&onehot, &[Some(0), Some(1)], &[0, 1], &model, 0.1).unwrap();
        assert!((reg - 0.1 * model.weight_norm_sq()).abs() < 1e-12);

        assert!(matches!(
            loss(&onehot, &[Some(0), None], &[1], &model, 0.0),
            Err(Error::Unlabeled(1))
        ));
        assert!(matches!(
            loss(&onehot, &[Some(0), None], &[], &model, 0.0),
            Err(Error::EmptyLabeledSet)
        ));
    }

    fn check_gradients(order: usize, l2: f64) {
        let (g, subs) = ten_node_graph();
        let cfg = DhneConfig {
            order,
            hidden: 5,
            dropout: 0.0,
            seed: 3,
            ..Default::default()
        };
        let model = init_model(&cfg, &subs, 4, 3).unwrap();
        let labeled = [0, 1, 2, 4, 7];
        let out = forward(&model, &g, &subs, false, 0).unwrap();
        let analytic = backward(out.cache, g.labels(), &labeled, &model, &subs, l2)
            .unwrap()
            .flatten();
        let mut probe = model.clone();
        let numeric = finite_difference_gradient(
            |theta| {
                probe.set_flat_parameters(theta).unwrap();
                let f = forward(&probe, &g, &subs, false, 0).unwrap().probabilities;
                loss(&f, g.labels(), &labeled, &probe, l2).unwrap()
            },
            &model.flat_parameters(),
            1e-5,
        )
        .unwrap();
        for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-5);
            assert!(rel < 1e-4, "param {i}: analytic {a} numeric {n}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        check_gradients(1, 5e-4);
        check_gradients(2, 0.0);
        check_gradients(3, 1e-2);
    }

    #[test]
    fn regularizer_gradient() {
        let (g, subs) = ten_node_graph();
        let model = init_model(&DhneConfig { dropout: 0.0, ..Default::default() }, &subs, 4, 3).unwrap();
        let a = backward(forward(&model, &g, &subs, false, 0).unwrap().cache, g.labels(), &[0], &model, &subs, 0.0).unwrap();
        let b = backward(forward(&model, &g, &subs, false, 0).unwrap().cache, g.labels(), &[0], &model, &subs, 0.25).unwrap();
        let diff: Vec<f64> = b.flatten().iter().zip(a.flatten()).map(|(x, y)| x - y).collect();
        for (d, w) in diff.iter().zip(model.flat_parameters()) {
            assert!((d - 0.5 * w).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_unlabeled_node_contributes_nothing() {
        // node 9 has no edges
        let (g, subs) = ten_node_graph();
        assert!(g.neighbors(9).unwrap().is_empty());
        let model = init_model(&DhneConfig::default(), &subs, 4, 3).unwrap();
        let with = backward(forward(&model, &g, &subs, false, 0).unwrap().cache, g.labels(), &[0, 1], &model, &subs, 0.0).unwrap();
        // zeroing the isolated node's features leaves every gradient unchanged
        let mut feats = g.features().clone();
        feats.row_mut(9).fill(0.0);
        let g2 = HinGraph::new(
            g.node_types().to_vec(),
            g.type_names().to_vec(),
            g.edges().iter().map(|e| (e.u, e.v, e.weight)),
            Some(feats),
            g.labels().to_vec(),
            3,
            EdgeMode::Unweighted,
        )
        .unwrap();
        let without = backward(forward(&model, &g2, &subs, false, 0).unwrap().cache, g2.labels(), &[0, 1], &model, &subs, 0.0).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn stale_cache_rejected() {
        let (g, subs) = ten_node_graph();
        let mut model = init_model(&DhneConfig::default(), &subs, 4, 3).unwrap();
        let out = forward(&model, &g, &subs, false, 0).unwrap();
        let flat = model.flat_parameters();
        model.set_flat_parameters(&flat).unwrap();
        assert!(matches!(
            backward(out.cache, g.labels(), &[0], &model, &subs, 0.0),
            Err(Error::StaleCache)
        ));
    }
}
