//! Active query engine: scoring criteria, candidate ranking, the reward
//! bandit and weighted Borda batch selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hingraph::{HinGraph, NodeImportance};
use crate::numerics::DenseMatrix;

mod audit;
mod bandit;
mod kmeans;

pub use audit::{AuditCandidates, AuditRecord};
pub use bandit::{
    borda_select, empirical_rewards, expected_reward, local_embedding_change, mean_reward,
    BanditState, BordaSelection, BIG_M, DEGENERATE_UNION,
};
pub use kmeans::{kmeans, Clustering, DEFAULT_MAX_ITERS};

/// A node-scoring criterion. The first three are the bandit arms; `Ie` and
/// `Id` are the neighborhood-free variants used for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Nc,
    Cie,
    Cid,
    Ie,
    Id,
}

impl Criterion {
    /// Bandit arms in their fixed order.
    pub const ARMS: [Criterion; 3] = [Criterion::Nc, Criterion::Cie, Criterion::Cid];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Nc => "nc",
            Criterion::Cie => "cie",
            Criterion::Cid => "cid",
            Criterion::Ie => "ie",
            Criterion::Id => "id",
        }
    }

    /// Position in [`Criterion::ARMS`], if this is an arm.
    pub fn arm_index(self) -> Option<usize> {
        Criterion::ARMS.iter().position(|&a| a == self)
    }
}

/// An arm's top-b pool nodes, best first. Rank of `nodes[i]` is `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub criterion: Criterion,
    pub nodes: Vec<usize>,
    pub scores: Vec<f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// 1-based rank of `v`, or `None` when `v` is not a candidate.
    pub fn rank(&self, v: usize) -> Option<usize> {
        self.nodes.iter().position(|&u| u == v).map(|i| i + 1)
    }
}

/// Degree centrality of each pool node.
///
/// # Panics
/// If a pool node is out of range.
pub fn score_nc(graph: &HinGraph, pool: &[usize]) -> Vec<f64> {
    pool.iter().map(|&v| graph.nbrs(v).len() as f64).collect()
}

/// Shannon entropy (natural log) of a probability row, with `0 ln 0 = 0`.
pub fn entropy(row: &[f64]) -> f64 {
    -row.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn score_ie(probabilities: &DenseMatrix, pool: &[usize]) -> Vec<f64> {
    pool.iter().map(|&v| entropy(probabilities.row(v))).collect()
}

/// Importance-weighted entropy over each pool node and its neighbors.
pub fn score_cie(
    graph: &HinGraph,
    importance: &NodeImportance,
    probabilities: &DenseMatrix,
    pool: &[usize],
) -> Vec<f64> {
    let w = &importance.weights;
    pool.iter()
        .map(|&i| {
            let own = w[i] * entropy(probabilities.row(i));
            own + graph
                .nbrs(i)
                .iter()
                .map(|&j| w[j] * entropy(probabilities.row(j)))
                .sum::<f64>()
        })
        .collect()
}

/// Information density `1 / (1 + distance to own cluster center)` for every row.
pub fn density(embedding: &DenseMatrix, clustering: &Clustering) -> Vec<f64> {
    (0..embedding.rows())
        .map(|v| {
            let c = clustering.centers.row(clustering.assignment[v]);
            let d = crate::numerics::squared_distance(embedding.row(v), c).sqrt();
            1.0 / (1.0 + d)
        })
        .collect()
}

pub fn score_id(embedding: &DenseMatrix, clustering: &Clustering, pool: &[usize]) -> Vec<f64> {
    let id = density(embedding, clustering);
    pool.iter().map(|&v| id[v]).collect()
}

/// Importance-weighted density over each pool node and its neighbors.
/// `clustering` must cover every row of `embedding`.
pub fn score_cid(
    graph: &HinGraph,
    importance: &NodeImportance,
    embedding: &DenseMatrix,
    clustering: &Clustering,
    pool: &[usize],
) -> Vec<f64> {
    let id = density(embedding, clustering);
    let w = &importance.weights;
    pool.iter()
        .map(|&i| w[i] * id[i] + graph.nbrs(i).iter().map(|&j| w[j] * id[j]).sum::<f64>())
        .collect()
}

/// Descending by score, then ascending by node id.
pub(crate) fn by_score_then_id(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `b` best pool nodes by score (`scores[i]` belongs to `pool[i]`).
pub fn top_b_candidates(
    scores: &[f64],
    pool: &[usize],
    b: usize,
    criterion: Criterion,
) -> Result<CandidateSet> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if b == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    if scores.len() != pool.len() {
        return Err(Error::LengthMismatch {
            op: "top_b_candidates",
            left: scores.len(),
            right: pool.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("candidate score"));
    }
    let mut pairs: Vec<(usize, f64)> = pool.iter().copied().zip(scores.iter().copied()).collect();
    pairs.sort_by(|&a, &b| by_score_then_id(a, b));
    pairs.truncate(b);
    Ok(CandidateSet {
        criterion,
        nodes: pairs.iter().map(|p| p.0).collect(),
        scores: pairs.iter().map(|p| p.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hingraph::tests::star;
    use crate::hingraph::{node_importance, EdgeMode};

    fn importance_of(weights: Vec<f64>) -> NodeImportance {
        let n = weights.len();
        NodeImportance {
            weights,
            neighbor_counts: vec![0; n],
            neighbor_type_counts: vec![0; n],
        }
    }

    fn pair_graph() -> HinGraph {
        // 0 - 1, node 2 isolated
        HinGraph::new(
            vec![0, 0, 0],
            vec!["a".into()],
            [(0, 1, 1.0)],
            None,
            vec![None; 3],
            0,
            EdgeMode::Unweighted,
        )
        .unwrap()
    }

    #[test]
    fn nc_is_degree() {
        let g = star(5);
        assert_eq!(score_nc(&g, &[0, 1, 6]), vec![5.0, 1.0, 0.0]);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]), 0.0);
        let uniform = entropy(&[0.25; 4]);
        assert!((uniform - 4f64.ln()).abs() < 1e-12);
        assert!((uniform - 1.386_29).abs() < 1e-5);
        for row in [[0.3, 0.3, 0.2, 0.2], [0.25 + 1e-6, 0.25 - 1e-6, 0.25, 0.25]] {
            assert!(entropy(&row) < uniform);
        }
    }

    #[test]
    fn cie_cases() {
        let g = pair_graph();
        let f = DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]);
        let h = 2f64.ln();
        let w = importance_of(vec![0.5, 0.5, 0.0]);
        let cie = score_cie(&g, &w, &f, &[0, 2]);
        assert!((cie[0] - h).abs() < 1e-12, "0.5 h + 0.5 h");
        assert_eq!(cie[1], 0.0);

        let real = node_importance(&g);
        let ie = score_ie(&f, &[0, 1, 2]);
        let cie = score_cie(&g, &real, &f, &[0, 1, 2]);
        for i in 0..3 {
            assert!(cie[i] >= real.weights[i] * ie[i]);
        }
        assert_eq!(cie[2], 0.0);
    }

    fn clustering_at(centers: DenseMatrix, assignment: Vec<usize>) -> Clustering {
        Clustering {
            centers,
            assignment,
            inertia: 0.0,
            inertia_history: vec![],
            iterations: 0,
        }
    }

    #[test]
    fn id_and_cid_cases() {
        let g = pair_graph();
        let e = DenseMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [1.0, 0.0]]);
        let c = clustering_at(DenseMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0]]), vec![0, 1, 0]);
        assert_eq!(score_id(&e, &c, &[0, 1, 2]), vec![1.0, 1.0, 0.5]);
        let w = importance_of(vec![0.5, 0.5, 0.9]);
        let cid = score_cid(&g, &w, &e, &c, &[0, 2]);
        assert!((cid[0] - 1.0).abs() < 1e-12);
        assert!((cid[1] - 0.45).abs() < 1e-12);

        let real = node_importance(&g);
        let cid = score_cid(&g, &real, &e, &c, &[0, 1, 2]);
        let id = score_id(&e, &c, &[0, 1, 2]);
        assert_eq!(cid[2], 0.0);
        for i in 0..3 {
            assert!(id[i] > 0.0 && id[i] <= 1.0);
            assert!(cid[i] >= real.weights[i] * id[i]);
        }
    }

    #[test]
    fn top_b_cases() {
        let c = top_b_candidates(&[3.0, 1.0, 2.0], &[0, 1, 2], 2, Criterion::Nc).unwrap();
        assert_eq!(c.nodes, vec![0, 2]);
        assert_eq!(c.rank(2), Some(2));
        assert_eq!(c.rank(1), None);
        let c = top_b_candidates(&[1.0; 3], &[2, 0, 1], 2, Criterion::Nc).unwrap();
        assert_eq!(c.nodes, vec![0, 1]);
        let c = top_b_candidates(&[1.0, 5.0], &[7, 3], 10, Criterion::Cie).unwrap();
        assert_eq!(c.nodes, vec![3, 7]);
        assert!(c.scores.windows(2).all(|w| w[0] >= w[1]));
        assert!(matches!(
            top_b_candidates(&[], &[], 2, Criterion::Nc),
            Err(Error::EmptyPool)
        ));
        assert!(top_b_candidates(&[f64::NAN], &[0], 1, Criterion::Nc).is_err());
    }

    #[test]
    fn scores_are_model_independent_for_nc() {
        let g = star(3);
        let pool: Vec<usize> = (0..g.num_nodes()).collect();
        assert_eq!(score_nc(&g, &pool), score_nc(&g, &pool));
        assert_eq!(score_nc(&g, &pool), vec![3.0, 1.0, 1.0, 1.0, 0.0]);
    }
}
