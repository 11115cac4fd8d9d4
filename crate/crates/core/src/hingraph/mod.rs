//! Heterogeneous network data model.
//!
//! A [`HinGraph`] holds typed nodes, undirected edges, node features and
//! optional ground-truth labels. [`decompose`] slices it into one homogeneous
//! or bipartite [`SubNetwork`] per node-type pair, each carrying its
//! row-normalized transition matrix.

mod decompose;
mod importance;
mod io;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub use decompose::{
    decompose, decompose_with, subnetwork_fingerprint, transition_matrix, DecomposeOptions,
    SubNetwork,
};
pub use importance::{node_importance, NodeImportance};
pub use io::{load_graph, write_graph, write_id_map, GraphFiles, LoadOptions};
pub use synth::{synth_hin, SynthParams};

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// How repeated edges between the same pair collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeMode {
    /// Every edge has weight 1; duplicates collapse to a single unit edge.
    #[default]
    Unweighted,
    /// Weights are kept; duplicates sum.
    Weighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HinGraph {
    node_types: Vec<usize>,
    type_names: Vec<String>,
    edges: Vec<Edge>,
    features: DenseMatrix,
    labels: Vec<Option<usize>>,
    num_classes: usize,
    weighted: bool,
    /// Distinct neighbors per node, sorted ascending.
    adjacency: Vec<Vec<usize>>,
    /// Original node ids when the input ids were not `0..N`.
    node_names: Option<Vec<String>>,
}

impl HinGraph {
    /// Validates and builds a graph.
    ///
    /// `features = None` gives one-hot identity features. Edge endpoints are
    /// normalized to `u < v` and deduplicated per `mode`.
    pub fn new(
        node_types: Vec<usize>,
        type_names: Vec<String>,
        raw_edges: impl IntoIterator<Item = (usize, usize, f64)>,
        features: Option<DenseMatrix>,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        mode: EdgeMode,
    ) -> Result<Self> {
        let n = node_types.len();
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                op: "HinGraph::new labels",
                left: labels.len(),
                right: n,
            });
        }
        if let Some(&t) = node_types.iter().find(|&&t| t >= type_names.len()) {
            return Err(Error::InvalidParameter(format!(
                "node type id {t} has no name ({} type names)",
                type_names.len()
            )));
        }
        for &label in labels.iter().flatten() {
            if label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    classes: num_classes,
                });
            }
        }
        let features = match features {
            Some(f) if f.rows() != n => {
                return Err(Error::dims("HinGraph::new features", f.shape(), (n, f.cols())))
            }
            Some(f) if !f.is_finite() => return Err(Error::NonFinite("node features")),
            Some(f) => f,
            None => DenseMatrix::identity(n),
        };

        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in raw_edges {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, nodes: n });
                }
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop on node {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "edge {a}-{b} has non-positive weight {w}"
                )));
            }
            let key = (a.min(b), a.max(b));
            match mode {
                EdgeMode::Unweighted => {
                    merged.insert(key, 1.0);
                }
                EdgeMode::Weighted => *merged.entry(key).or_insert(0.0) += w,
            }
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), weight)| Edge { u, v, weight })
            .collect();

        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.u].push(e.v);
            adjacency[e.v].push(e.u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }

        Ok(Self {
            node_types,
            type_names,
            edges,
            features,
            labels,
            num_classes,
            weighted: mode == EdgeMode::Weighted,
            adjacency,
            node_names: None,
        })
    }

    pub(crate) fn with_node_names(mut self, names: Option<Vec<String>>) -> Self {
        self.node_names = names;
        self
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.node_types.len()
    }

    /// Number of distinct node types (`V_T`).
    #[inline]
    pub fn num_types(&self) -> usize {
        self.type_names.len()
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn node_type(&self, v: usize) -> usize {
        self.node_types[v]
    }

    pub fn node_types(&self) -> &[usize] {
        &self.node_types
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    /// Nodes carrying a ground-truth label, ascending.
    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&v| self.labels[v].is_some())
            .collect()
    }

    /// Distinct direct neighbors across all edge types, ascending.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        self.check_node(v)?;
        Ok(&self.adjacency[v])
    }

    /// Unchecked variant for hot loops over known-valid ids.
    #[inline]
    pub(crate) fn nbrs(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Number of distinct neighbors in the full network.
    pub fn degree_centrality(&self, v: usize) -> Result<usize> {
        self.neighbors(v).map(<[usize]>::len)
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.num_nodes() {
            return Err(Error::NodeOutOfRange {
                node: v,
                nodes: self.num_nodes(),
            });
        }
        Ok(())
    }
}
