use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alloop::{evaluate_accuracy, split_dataset, LoopConfig, Oracle, RetrainMode, Split, Strategy};
use crate::aqhn::{
    borda_select, empirical_rewards, expected_reward, kmeans, local_embedding_change, mean_reward,
    score_cid, score_cie, score_id, score_ie, score_nc, top_b_candidates, AuditCandidates,
    AuditRecord, BanditState, CandidateSet, Clustering, Criterion, DEFAULT_MAX_ITERS,
};
use crate::dhne::{init_model, train, DhneConfig, DhneModel};
use crate::error::Result;
use crate::hingraph::{decompose_with, node_importance, DecomposeOptions, HinGraph, NodeImportance, SubNetwork};
use crate::numerics::DenseMatrix;
use crate::seed::derive_seed;

// Stream ids for derive_seed(master, ..).
const SPLIT_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const RANDOM_STREAM: u64 = 2;
const TRAIN_STREAM: u64 = 3;
const KMEANS_STREAM: u64 = 4;
const COLD_INIT_STREAM: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Nodes labeled in this iteration.
    pub queried: Vec<usize>,
    /// `|L|` after this iteration.
    pub num_labeled: usize,
    /// Bandit rewards earned by this iteration's batch (full strategy, r >= 2).
    pub rewards: Option<Vec<f64>>,
    pub test_accuracy: f64,
    /// Training loss of the last epoch run, if any.
    pub train_loss: Option<f64>,
    pub epochs_run: usize,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopOutcome {
    pub split: Split,
    pub records: Vec<IterationRecord>,
    pub audit: Vec<AuditRecord>,
    /// Labeled nodes in the order they were queried.
    pub labeled: Vec<usize>,
    pub query_cost: usize,
    pub bandit: BanditState,
}

struct Selection {
    batch: Vec<usize>,
    per_arm: Vec<Vec<usize>>,
    candidates: Vec<CandidateSet>,
    mean: Option<Vec<f64>>,
    expected: Option<Vec<f64>>,
}

struct Context<'a> {
    graph: &'a HinGraph,
    cfg: &'a LoopConfig,
    importance: NodeImportance,
}

/// Runs the active-learning experiment described by `cfg` on `graph`.
///
/// Iteration 1 starts from an empty labeled set and queries the top nodes by
/// degree (random batches for the random strategy). Every iteration then
/// labels its batch, retrains, scores the effect of the batch for the bandit,
/// picks the next batch and records test accuracy. The loop ends after
/// `cfg.iterations` iterations or once the pool is empty.
pub fn run_active_loop(graph: &HinGraph, cfg: &LoopConfig) -> Result<LoopOutcome> {
    cfg.validate()?;
    let subnets = decompose_with(graph, DecomposeOptions { self_loops: cfg.dhne.self_loops });
    let split = split_dataset(graph, derive_seed(cfg.seed, SPLIT_STREAM))?;
    let ctx = Context {
        graph,
        cfg,
        importance: node_importance(graph),
    };
    let mut pool = split.pool.clone();
    let mut labeled: Vec<usize> = Vec::new();
    let mut oracle = Oracle::new(graph);
    let mut bandit = BanditState::new();
    let mut random = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, RANDOM_STREAM));
    let mut model = fresh_model(cfg, &subnets, graph, derive_seed(cfg.seed, INIT_STREAM))?;

    let mut next = initial_selection(&ctx, &pool, &mut random)?;
    if cfg.strategy == Strategy::Full {
        bandit.credit(0, next.batch.len());
    }
    let mut previous: Option<DenseMatrix> = None;
    let mut records = Vec::new();
    let mut audit = Vec::new();

    for r in 1..=cfg.iterations {
        if pool.is_empty() {
            break;
        }
        let started = Instant::now();
        let current = next;
        oracle.query(&current.batch)?;
        pool.retain(|v| !current.batch.contains(v));
        labeled.extend_from_slice(&current.batch);

        if cfg.retrain == RetrainMode::Cold {
            let seed = derive_seed(derive_seed(cfg.seed, COLD_INIT_STREAM), r as u64);
            model = fresh_model(cfg, &subnets, graph, seed)?;
        }
        let train_cfg = DhneConfig {
            seed: derive_seed(derive_seed(cfg.seed, TRAIN_STREAM), r as u64),
            ..cfg.dhne.clone()
        };
        let outcome = train(&mut model, graph, &subnets, &labeled, &split.validation, &train_cfg)?;
        let embedding = outcome.embedding;

        let mut delta = None;
        let mut delta_union = None;
        let mut rewards = None;
        if let (Strategy::Full, Some(prev)) = (cfg.strategy, &previous) {
            let per_arm = current
                .per_arm
                .iter()
                .map(|q| local_embedding_change(graph, q, &embedding, prev))
                .collect::<Result<Vec<f64>>>()?;
            let union = local_embedding_change(graph, &current.batch, &embedding, prev)?;
            let hat = empirical_rewards(&per_arm, union)?;
            bandit.record_rewards(&hat)?;
            delta = Some(per_arm);
            delta_union = Some(union);
            rewards = Some(hat);
        }

        next = if r < cfg.iterations && !pool.is_empty() {
            let kseed = derive_seed(derive_seed(cfg.seed, KMEANS_STREAM), r as u64);
            select(&ctx, &pool, &embedding, &outcome.probabilities, &bandit, kseed, &mut random)?
        } else {
            Selection::empty()
        };
        if cfg.strategy == Strategy::Full {
            for (arm, q) in next.per_arm.iter().enumerate() {
                bandit.credit(arm, q.len());
            }
        }

        let accuracy = evaluate_accuracy(&outcome.probabilities, &split.test, graph.labels());
        records.push(IterationRecord {
            iteration: r,
            queried: current.batch.clone(),
            num_labeled: labeled.len(),
            rewards: rewards.clone(),
            test_accuracy: accuracy,
            train_loss: outcome.loss_trace.last().copied(),
            epochs_run: outcome.loss_trace.len(),
            seconds: cfg.record_wall_time.then(|| started.elapsed().as_secs_f64()),
        });
        audit.push(AuditRecord {
            iteration: r,
            query: current.batch,
            query_per_arm: current.per_arm,
            delta,
            delta_union,
            rewards,
            candidates: next.candidates.iter().map(AuditCandidates::from).collect(),
            mean_reward: next.mean.clone(),
            expected_reward: next.expected.clone(),
            next_query: next.batch.clone(),
            next_query_per_arm: next.per_arm.clone(),
            queried_counts: bandit.queried_counts().to_vec(),
        });
        previous = Some(embedding);
    }

    Ok(LoopOutcome {
        split,
        records,
        audit,
        query_cost: oracle.cost(),
        labeled,
        bandit,
    })
}

fn fresh_model(
    cfg: &LoopConfig,
    subnets: &[SubNetwork],
    graph: &HinGraph,
    seed: u64,
) -> Result<DhneModel> {
    let init = DhneConfig {
        seed,
        ..cfg.dhne.clone()
    };
    init_model(&init, subnets, graph.features().cols(), graph.num_classes())
}

impl Selection {
    fn empty() -> Self {
        Selection {
            batch: vec![],
            per_arm: vec![],
            candidates: vec![],
            mean: None,
            expected: None,
        }
    }

    fn single(set: CandidateSet, arms: bool) -> Self {
        let batch = set.nodes.clone();
        let per_arm = if arms {
            let mut p = vec![vec![]; Criterion::ARMS.len()];
            p[0] = batch.clone();
            p
        } else {
            vec![]
        };
        Selection {
            batch,
            per_arm,
            candidates: vec![set],
            mean: None,
            expected: None,
        }
    }
}

fn random_batch(pool: &[usize], b: usize, rng: &mut ChaCha8Rng) -> Selection {
    Selection {
        batch: pool.choose_multiple(rng, b).copied().collect(),
        ..Selection::empty()
    }
}

/// Zero-start: no model has been trained yet, so only degree is available.
fn initial_selection(ctx: &Context, pool: &[usize], rng: &mut ChaCha8Rng) -> Result<Selection> {
    let b = ctx.cfg.batch_size;
    if ctx.cfg.strategy == Strategy::Random {
        return Ok(random_batch(pool, b, rng));
    }
    let set = top_b_candidates(&score_nc(ctx.graph, pool), pool, b, Criterion::Nc)?;
    Ok(Selection::single(set, ctx.cfg.strategy == Strategy::Full))
}

fn select(
    ctx: &Context,
    pool: &[usize],
    embedding: &DenseMatrix,
    probabilities: &DenseMatrix,
    bandit: &BanditState,
    kmeans_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Selection> {
    let b = ctx.cfg.batch_size;
    let g = ctx.graph;
    let clusters = || -> Result<Clustering> {
        kmeans(embedding, g.num_classes(), kmeans_seed, DEFAULT_MAX_ITERS)
    };
    let one = |criterion: Criterion, scores: Vec<f64>| -> Result<Selection> {
        Ok(Selection::single(top_b_candidates(&scores, pool, b, criterion)?, false))
    };
    match ctx.cfg.strategy {
        Strategy::Random => Ok(random_batch(pool, b, rng)),
        Strategy::NcOnly => one(Criterion::Nc, score_nc(g, pool)),
        Strategy::IeOnly => one(Criterion::Ie, score_ie(probabilities, pool)),
        Strategy::CieOnly => one(
            Criterion::Cie,
            score_cie(g, &ctx.importance, probabilities, pool),
        ),
        Strategy::IdOnly => one(Criterion::Id, score_id(embedding, &clusters()?, pool)),
        Strategy::CidOnly => one(
            Criterion::Cid,
            score_cid(g, &ctx.importance, embedding, &clusters()?, pool),
        ),
        Strategy::Full => {
            let clustering = clusters()?;
            let sets = vec![
                top_b_candidates(&score_nc(g, pool), pool, b, Criterion::Nc)?,
                top_b_candidates(
                    &score_cie(g, &ctx.importance, probabilities, pool),
                    pool,
                    b,
                    Criterion::Cie,
                )?,
                top_b_candidates(
                    &score_cid(g, &ctx.importance, embedding, &clustering, pool),
                    pool,
                    b,
                    Criterion::Cid,
                )?,
            ];
            let arms = 0..Criterion::ARMS.len();
            let mean: Vec<f64> = arms.clone().map(|a| mean_reward(bandit, a)).collect();
            let expected: Vec<f64> = arms.map(|a| expected_reward(bandit, a)).collect();
            let chosen = borda_select(&sets, &expected, b)?;
            Ok(Selection {
                batch: chosen.batch,
                per_arm: chosen.per_arm,
                candidates: sets,
                mean: Some(mean),
                expected: Some(expected),
            })
        }
    }
}
