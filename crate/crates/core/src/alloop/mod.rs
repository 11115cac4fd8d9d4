//! The query, label, retrain experiment loop and its baselines.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dhne::{predict, DhneConfig};
use crate::error::{Error, Result};
use crate::hingraph::HinGraph;
use crate::numerics::DenseMatrix;

mod repeat;
mod run;

pub use repeat::{aggregate, run_repeated, AggregateRow, RepeatedOutcome};
pub use run::{run_active_loop, IterationRecord, LoopOutcome};

/// How query batches are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// NC, CIE and CID combined by the bandit and weighted Borda count.
    Full,
    NcOnly,
    CieOnly,
    IeOnly,
    CidOnly,
    IdOnly,
    /// Uniform random batches (seeded).
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Full,
        Strategy::NcOnly,
        Strategy::CieOnly,
        Strategy::IeOnly,
        Strategy::CidOnly,
        Strategy::IdOnly,
        Strategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::NcOnly => "nc-only",
            Strategy::CieOnly => "cie-only",
            Strategy::IeOnly => "ie-only",
            Strategy::CidOnly => "cid-only",
            Strategy::IdOnly => "id-only",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|x| x.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown strategy `{s}`, expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrainMode {
    /// Continue from the previous iteration's weights and optimizer state.
    Warm,
    /// Re-initialize from a per-iteration seed before every retrain.
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub batch_size: usize,
    pub iterations: usize,
    pub strategy: Strategy,
    pub retrain: RetrainMode,
    pub dhne: DhneConfig,
    /// Master seed; every random stream of a run derives from it.
    pub seed: u64,
    /// Fill the `seconds` field of iteration records. Off by default so
    /// repeated runs produce identical output.
    pub record_wall_time: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            batch_size: 20,
            iterations: 40,
            strategy: Strategy::Full,
            retrain: RetrainMode::Warm,
            dhne: DhneConfig::default(),
            seed: 0,
            record_wall_time: false,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        self.dhne.validate()
    }
}

/// Disjoint node sets of one experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Training portion whose labels are hidden behind the oracle.
    pub pool: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles the labeled nodes and splits them 25% pool, 25% validation and
/// the remaining 50% test. Each part is returned in ascending node order.
pub fn split_dataset(graph: &HinGraph, seed: u64) -> Result<Split> {
    let mut labeled = graph.labeled_nodes();
    if labeled.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 labeled nodes to split, found {}",
            labeled.len()
        )));
    }
    labeled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let quarter = labeled.len() / 4;
    let mut pool = labeled[..quarter].to_vec();
    let mut validation = labeled[quarter..2 * quarter].to_vec();
    let mut test = labeled[2 * quarter..].to_vec();
    pool.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(Split { pool, validation, test })
}

/// Simulated annotator backed by the graph's ground-truth labels.
#[derive(Debug, Clone)]
pub struct Oracle<'g> {
    graph: &'g HinGraph,
    answered: BTreeSet<usize>,
}

impl<'g> Oracle<'g> {
    pub fn new(graph: &'g HinGraph) -> Self {
        Self {
            graph,
            answered: BTreeSet::new(),
        }
    }

    /// Returns the true labels of `nodes`. The whole request is rejected if any
    /// node is unlabeled, out of range, or was already queried.
    pub fn query(&mut self, nodes: &[usize]) -> Result<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut labels = Vec::with_capacity(nodes.len());
        for &v in nodes {
            if v >= self.graph.num_nodes() {
                return Err(Error::NodeOutOfRange {
                    node: v,
                    nodes: self.graph.num_nodes(),
                });
            }
            if self.answered.contains(&v) || !seen.insert(v) {
                return Err(Error::AlreadyLabeled(v));
            }
            labels.push(self.graph.label(v).ok_or(Error::Unlabeled(v))?);
        }
        self.answered.extend(seen);
        Ok(labels)
    }

    /// Number of labels handed out so far.
    pub fn cost(&self) -> usize {
        self.answered.len()
    }
}

/// Fraction of `test` nodes whose predicted class equals the ground truth.
/// An empty test set scores 0.
pub fn evaluate_accuracy(probabilities: &DenseMatrix, test: &[usize], labels: &[Option<usize>]) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let pred = predict(probabilities);
    let correct = test.iter().filter(|&&v| labels[v] == Some(pred[v])).count();
    correct as f64 / test.len() as f64
}
