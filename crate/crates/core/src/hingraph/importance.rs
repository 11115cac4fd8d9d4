use std::collections::BTreeSet;

use crate::hingraph::HinGraph;

/// Per-node weight `w_i = tanh(n_i / N + m_i / V_T)` used to convolve
/// strategy scores over neighborhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeImportance {
    pub weights: Vec<f64>,
    /// Distinct neighbors `n_i`.
    pub neighbor_counts: Vec<usize>,
    /// Distinct node types among those neighbors `m_i`.
    pub neighbor_type_counts: Vec<usize>,
}

pub fn node_importance(g: &HinGraph) -> NodeImportance {
    let n = g.num_nodes();
    let vt = g.num_types().max(1) as f64;
    let mut weights = Vec::with_capacity(n);
    let mut neighbor_counts = Vec::with_capacity(n);
    let mut neighbor_type_counts = Vec::with_capacity(n);
    for v in 0..n {
        let nbrs = g.nbrs(v);
        let types: BTreeSet<usize> = nbrs.iter().map(|&u| g.node_type(u)).collect();
        let ni = nbrs.len();
        let mi = types.len();
        weights.push((ni as f64 / n as f64 + mi as f64 / vt).tanh());
        neighbor_counts.push(ni);
        neighbor_type_counts.push(mi);
    }
    NodeImportance {
        weights,
        neighbor_counts,
        neighbor_type_counts,
    }
}
