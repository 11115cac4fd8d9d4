use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::hingraph::HinGraph;
use crate::numerics::{row_normalize, SparseMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecomposeOptions {
    /// Add a unit self-loop for every member before normalization.
    pub self_loops: bool,
}

/// One homogeneous (`a == b`) or bipartite slice of the network.
#[derive(Debug, Clone)]
pub struct SubNetwork {
    index: usize,
    type_pair: (usize, usize),
    members: Vec<usize>,
    /// Global node id -> local row, `usize::MAX` for non-members.
    local: Vec<usize>,
    edges: Vec<(usize, usize)>,
    adjacency: SparseMatrix,
    transition: SparseMatrix,
    transition_t: SparseMatrix,
}

impl SubNetwork {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn type_pair(&self) -> (usize, usize) {
        self.type_pair
    }

    pub fn is_homogeneous(&self) -> bool {
        self.type_pair.0 == self.type_pair.1
    }

    /// Member nodes as global ids, ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        match self.local.get(global) {
            Some(&l) if l != usize::MAX => Some(l),
            _ => None,
        }
    }

    pub fn global_index(&self, local: usize) -> usize {
        self.members[local]
    }

    /// Edges of this slice as global `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Symmetric local adjacency `A_t`.
    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    /// Row-normalized transition matrix `P_t = D_t⁻¹ A_t`.
    pub fn transition(&self) -> &SparseMatrix {
        &self.transition
    }

    pub fn transition_transposed(&self) -> &SparseMatrix {
        &self.transition_t
    }
}

/// Row-normalizes the local adjacency of `s`.
pub fn transition_matrix(s: &SubNetwork) -> SparseMatrix {
    row_normalize(&s.adjacency).expect("adjacency is square and nonnegative")
}

pub fn decompose(g: &HinGraph) -> Vec<SubNetwork> {
    decompose_with(g, DecomposeOptions::default())
}

/// One sub-network per node-type pair `{a, b}` that has at least one edge,
/// ordered lexicographically by `(min type, max type)`.
pub fn decompose_with(g: &HinGraph, opts: DecomposeOptions) -> Vec<SubNetwork> {
    let mut by_pair: BTreeMap<(usize, usize), Vec<(usize, usize, f64)>> = BTreeMap::new();
    for e in g.edges() {
        let (ta, tb) = (g.node_type(e.u), g.node_type(e.v));
        by_pair
            .entry((ta.min(tb), ta.max(tb)))
            .or_default()
            .push((e.u, e.v, e.weight));
    }

    by_pair
        .into_iter()
        .enumerate()
        .map(|(index, (type_pair, edges))| {
            let mut members: Vec<usize> = edges.iter().flat_map(|&(u, v, _)| [u, v]).collect();
            members.sort_unstable();
            members.dedup();
            let mut local = vec![usize::MAX; g.num_nodes()];
            for (l, &m) in members.iter().enumerate() {
                local[m] = l;
            }
            let n = members.len();
            let mut triplets: Vec<(usize, usize, f64)> = edges
                .iter()
                .flat_map(|&(u, v, w)| [(local[u], local[v], w), (local[v], local[u], w)])
                .collect();
            if opts.self_loops {
                triplets.extend((0..n).map(|l| (l, l, 1.0)));
            }
            let adjacency =
                SparseMatrix::from_triplets(n, n, triplets).expect("local indices are in range");
            let transition = row_normalize(&adjacency).expect("adjacency is nonnegative");
            let transition_t = transition.transpose();
            SubNetwork {
                index,
                type_pair,
                members,
                local,
                edges: edges.iter().map(|&(u, v, _)| (u, v)).collect(),
                adjacency,
                transition,
                transition_t,
            }
        })
        .collect()
}

/// Digest of the sub-network ordering and membership, used to tie model
/// checkpoints to the graph they were trained on.
pub fn subnetwork_fingerprint(subnets: &[SubNetwork]) -> String {
    let mut h = Sha256::new();
    for s in subnets {
        h.update(format!("{}:{}-{}:", s.index, s.type_pair.0, s.type_pair.1).as_bytes());
        for m in &s.members {
            h.update(m.to_le_bytes());
        }
        h.update(s.adjacency.nnz().to_le_bytes());
    }
    hex::encode(&h.finalize()[..16])
}
