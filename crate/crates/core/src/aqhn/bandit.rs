use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aqhn::{by_score_then_id, CandidateSet, Criterion};
use crate::error::{Error, Result};
use crate::hingraph::HinGraph;
use crate::numerics::{squared_distance, DenseMatrix};

/// Expected reward of an arm that has never been credited with a query.
pub const BIG_M: f64 = 1e6;

/// Below this total change every arm gets an equal share.
pub const DEGENERATE_UNION: f64 = 1e-12;

const ARMS: usize = Criterion::ARMS.len();

/// Total embedding movement of the neighbors of `queried`. A neighbor shared
/// by two queried nodes is counted once per queried node.
pub fn local_embedding_change(
    graph: &HinGraph,
    queried: &[usize],
    current: &DenseMatrix,
    previous: &DenseMatrix,
) -> Result<f64> {
    if current.shape() != previous.shape() {
        return Err(Error::dims("local_embedding_change", current.shape(), previous.shape()));
    }
    if current.rows() != graph.num_nodes() {
        return Err(Error::LengthMismatch {
            op: "local_embedding_change",
            left: current.rows(),
            right: graph.num_nodes(),
        });
    }
    let mut total = 0.0;
    for &i in queried {
        if i >= graph.num_nodes() {
            return Err(Error::NodeOutOfRange { node: i, nodes: graph.num_nodes() });
        }
        for &j in graph.nbrs(i) {
            total += squared_distance(current.row(j), previous.row(j)).sqrt();
        }
    }
    Ok(total)
}

/// Each arm's share of the union change, or `1/Λ` each when the union
/// change is below [`DEGENERATE_UNION`].
pub fn empirical_rewards(deltas: &[f64], union: f64) -> Result<Vec<f64>> {
    if let Some(&bad) = deltas.iter().chain([&union]).find(|d| d.is_nan() || **d < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "embedding change must be non-negative, got {bad}"
        )));
    }
    if union < DEGENERATE_UNION {
        let share = 1.0 / deltas.len() as f64;
        return Ok(vec![share; deltas.len()]);
    }
    Ok(deltas.iter().map(|d| d / union).collect())
}

/// Reward history and query counts of the three arms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BanditState {
    history: [Vec<f64>; ARMS],
    queried: [usize; ARMS],
}

impl BanditState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current iteration `r`: one more than the number of recorded rewards.
    pub fn iteration(&self) -> usize {
        self.history[0].len() + 1
    }

    pub fn history(&self, arm: usize) -> &[f64] {
        &self.history[arm]
    }

    /// `n_λ`, the number of queried nodes credited to `arm`.
    pub fn queried(&self, arm: usize) -> usize {
        self.queried[arm]
    }

    pub fn queried_counts(&self) -> [usize; ARMS] {
        self.queried
    }

    pub fn record_rewards(&mut self, rewards: &[f64]) -> Result<()> {
        if rewards.len() != ARMS {
            return Err(Error::LengthMismatch {
                op: "record_rewards",
                left: rewards.len(),
                right: ARMS,
            });
        }
        for (h, &r) in self.history.iter_mut().zip(rewards) {
            h.push(r);
        }
        Ok(())
    }

    pub fn credit(&mut self, arm: usize, nodes: usize) {
        self.queried[arm] += nodes;
    }
}

/// `μ̄`: 1 before any reward, the single reward after one, otherwise the
/// mean of the last two.
pub fn mean_reward(state: &BanditState, arm: usize) -> f64 {
    match state.history(arm) {
        [] => 1.0,
        [only] => *only,
        [.., a, b] => (a + b) / 2.0,
    }
}

/// `μ̃ = μ̄ + sqrt(3 ln r / (2 n_λ))`, or [`BIG_M`] for an arm with `n_λ = 0`.
pub fn expected_reward(state: &BanditState, arm: usize) -> f64 {
    let n = state.queried(arm);
    if n == 0 {
        return BIG_M;
    }
    let r = state.iteration() as f64;
    mean_reward(state, arm) + (3.0 * r.ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BordaSelection {
    /// Selected batch, best first.
    pub batch: Vec<usize>,
    /// Per candidate set, its members that were selected (in rank order).
    pub per_arm: Vec<Vec<usize>>,
    /// Weighted Borda score of every candidate, ascending by node id.
    pub scores: Vec<(usize, f64)>,
}

/// Weighted Borda count: a node ranked `k` by arm `λ` earns
/// `weights[λ] · (b − k)`; nodes outside an arm's set earn nothing from it.
/// The top `b` nodes form the batch, ties broken by ascending node id.
pub fn borda_select(sets: &[CandidateSet], weights: &[f64], b: usize) -> Result<BordaSelection> {
    if sets.len() != weights.len() {
        return Err(Error::LengthMismatch {
            op: "borda_select",
            left: sets.len(),
            right: weights.len(),
        });
    }
    if b == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    if sets.iter().all(CandidateSet::is_empty) {
        return Err(Error::EmptyPool);
    }
    if let Some(s) = sets.iter().find(|s| s.len() > b) {
        return Err(Error::InvalidParameter(format!(
            "candidate set for {} has {} nodes, more than b = {b}",
            s.criterion.name(),
            s.len()
        )));
    }
    let mut score: BTreeMap<usize, f64> = BTreeMap::new();
    for (set, &w) in sets.iter().zip(weights) {
        for (i, &v) in set.nodes.iter().enumerate() {
            *score.entry(v).or_insert(0.0) += w * (b - (i + 1)) as f64;
        }
    }
    let scores: Vec<(usize, f64)> = score.into_iter().collect();
    let mut ranked = scores.clone();
    ranked.sort_by(|&x, &y| by_score_then_id(x, y));
    let batch: Vec<usize> = ranked.iter().take(b).map(|p| p.0).collect();
    let per_arm = sets
        .iter()
        .map(|s| s.nodes.iter().copied().filter(|v| batch.contains(v)).collect())
        .collect();
    Ok(BordaSelection { batch, per_arm, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hingraph::EdgeMode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path3() -> HinGraph {
        // 0 - 1 - 2, node 3 isolated
        HinGraph::new(
            vec![0; 4],
            vec!["a".into()],
            [(0, 1, 1.0), (1, 2, 1.0)],
            None,
            vec![None; 4],
            0,
            EdgeMode::Unweighted,
        )
        .unwrap()
    }

    #[test]
    fn embedding_change_cases() {
        let g = path3();
        let prev = DenseMatrix::zeros(4, 2);
        assert_eq!(local_embedding_change(&g, &[0, 1, 2], &prev, &prev).unwrap(), 0.0);
        let mut cur = prev.clone();
        cur.set(1, 0, 3.0);
        cur.set(1, 1, 4.0);
        assert_eq!(local_embedding_change(&g, &[0], &cur, &prev).unwrap(), 5.0);
        assert_eq!(local_embedding_change(&g, &[0, 2], &cur, &prev).unwrap(), 10.0);
        assert_eq!(local_embedding_change(&g, &[3], &cur, &prev).unwrap(), 0.0);
        assert!(local_embedding_change(&g, &[0], &DenseMatrix::zeros(4, 3), &prev).is_err());
    }

    #[test]
    fn reward_cases() {
        assert_eq!(empirical_rewards(&[2.0, 1.0, 1.0], 2.0).unwrap(), vec![1.0, 0.5, 0.5]);
        assert_eq!(empirical_rewards(&[0.0; 3], 0.0).unwrap(), vec![1.0 / 3.0; 3]);
        assert_eq!(empirical_rewards(&[0.0, 1.0, 1.0], 1.0).unwrap()[0], 0.0);
        assert!(empirical_rewards(&[-1.0, 1.0, 1.0], 1.0).is_err());
        assert!(empirical_rewards(&[f64::NAN, 1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn expected_reward_cases() {
        let mut s = BanditState::new();
        assert_eq!(s.iteration(), 1);
        for arm in 0..3 {
            assert_eq!(mean_reward(&s, arm), 1.0);
            assert_eq!(expected_reward(&s, arm), BIG_M);
        }
        s.credit(0, 10);
        assert_eq!(expected_reward(&s, 0), 1.0, "ln 1 = 0");
        s.record_rewards(&[0.4, 0.2, 0.1]).unwrap();
        assert_eq!(mean_reward(&s, 0), 0.4);
        s.record_rewards(&[0.6, 0.2, 0.1]).unwrap();
        assert_eq!(s.iteration(), 3);
        let oracle = 0.5 + (3.0 * 3f64.ln() / 20.0).sqrt();
        assert!((expected_reward(&s, 0) - oracle).abs() < 1e-12);
        assert!((expected_reward(&s, 0) - 0.90595).abs() < 1e-5);
        s.credit(1, 10);
        let before = expected_reward(&s, 1);
        s.credit(1, 10);
        assert!(expected_reward(&s, 1) < before);
    }

    fn set(criterion: Criterion, nodes: &[usize]) -> CandidateSet {
        CandidateSet {
            criterion,
            nodes: nodes.to_vec(),
            scores: (0..nodes.len()).rev().map(|x| x as f64).collect(),
        }
    }

    #[test]
    fn borda_cases() {
        let sets = [set(Criterion::Nc, &[5, 1]), set(Criterion::Cie, &[5, 2]), set(Criterion::Cid, &[3, 4])];
        let sel = borda_select(&sets, &[1.0; 3], 2).unwrap();
        let five = sel.scores.iter().find(|p| p.0 == 5).unwrap().1;
        assert_eq!(five, 2.0);
        assert_eq!(sel.batch, vec![5, 3]);
        assert_eq!(sel.per_arm, vec![vec![5], vec![5], vec![3]]);

        // a zero-weight arm cannot move the outcome
        let a = borda_select(&sets, &[1.0, 1.0, 0.0], 2).unwrap();
        let other = [sets[0].clone(), sets[1].clone(), set(Criterion::Cid, &[9, 8])];
        let b = borda_select(&other, &[1.0, 1.0, 0.0], 2).unwrap();
        assert_eq!(a.batch, b.batch);

        let empty = [set(Criterion::Nc, &[]), set(Criterion::Cie, &[]), set(Criterion::Cid, &[])];
        assert!(matches!(borda_select(&empty, &[1.0; 3], 2), Err(Error::EmptyPool)));
    }

    /// Exhaustive scorer: every node id in range, score by direct rank lookup,
    /// then repeated argmax with the id tie-break.
    fn oracle(sets: &[CandidateSet], weights: &[f64], b: usize, n: usize) -> Vec<usize> {
        let mut pts = vec![None; n];
        for v in 0..n {
            for (s, &w) in sets.iter().zip(weights) {
                if let Some(r) = s.rank(v) {
                    *pts[v].get_or_insert(0.0) += w * (b - r) as f64;
                }
            }
        }
        let mut out = Vec::new();
        for _ in 0..b {
            let mut best: Option<usize> = None;
            for v in 0..n {
                let Some(p) = pts[v] else { continue };
                if out.contains(&v) {
                    continue;
                }
                if best.is_none_or(|bv| p > pts[bv].unwrap()) {
                    best = Some(v);
                }
            }
            match best {
                Some(v) => out.push(v),
                None => break,
            }
        }
        out
    }

    #[test]
    fn borda_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let b = rng.random_range(1..8);
            let n = rng.random_range(1..25);
            let mut sets = Vec::new();
            for arm in Criterion::ARMS {
                let mut ids: Vec<usize> = (0..n).collect();
                let take = rng.random_range(0..=b.min(n));
                let mut nodes = Vec::new();
                for _ in 0..take {
                    nodes.push(ids.swap_remove(rng.random_range(0..ids.len())));
                }
                sets.push(set(arm, &nodes));
            }
            if sets.iter().all(|s| s.is_empty()) {
                continue;
            }
            let weights: Vec<f64> = (0..3)
                .map(|_| match rng.random_range(0..4) {
                    0 => BIG_M,
                    1 => 1.0,
                    _ => rng.random_range(0.0..2.0),
                })
                .collect();
            let got = borda_select(&sets, &weights, b).unwrap();
            assert_eq!(got.batch, oracle(&sets, &weights, b, n));
            // every selected node is some arm's candidate
            let covered: std::collections::BTreeSet<usize> =
                got.per_arm.iter().flatten().copied().collect();
            assert_eq!(covered, got.batch.iter().copied().collect());
        }
    }

    #[test]
    fn uniform_weight_scaling_keeps_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let b = rng.random_range(1..6);
            let sets: Vec<CandidateSet> = Criterion::ARMS
                .iter()
                .map(|&arm| {
                    let mut ids: Vec<usize> = (0..12).collect();
                    let nodes: Vec<usize> =
                        (0..b).map(|_| ids.swap_remove(rng.random_range(0..ids.len()))).collect();
                    set(arm, &nodes)
                })
                .collect();
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..2.0)).collect();
            let scaled: Vec<f64> = w.iter().map(|x| x * 4.0).collect();
            assert_eq!(
                borda_select(&sets, &w, b).unwrap().batch,
                borda_select(&sets, &scaled, b).unwrap().batch
            );
        }
    }
}
