use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alloop::{run_active_loop, LoopConfig, LoopOutcome};
use crate::error::{Error, Result};
use crate::hingraph::HinGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iteration: usize,
    pub mean_accuracy: f64,
    /// Population standard deviation across runs.
    pub std_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    /// Runs that reached this iteration.
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedOutcome {
    /// Run `i` used master seed `cfg.seed + i`.
    pub runs: Vec<LoopOutcome>,
    pub aggregate: Vec<AggregateRow>,
}

/// Per-iteration mean, population std, min and max of test accuracy.
pub fn aggregate(runs: &[LoopOutcome]) -> Vec<AggregateRow> {
    let longest = runs.iter().map(|r| r.records.len()).max().unwrap_or(0);
    (0..longest)
        .map(|i| {
            let acc: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.records.get(i).map(|x| x.test_accuracy))
                .collect();
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let var = acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            AggregateRow {
                iteration: i + 1,
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
                min_accuracy: acc.iter().copied().fold(f64::INFINITY, f64::min),
                max_accuracy: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                runs: acc.len(),
            }
        })
        .collect()
}

/// Runs the loop `runs` times with master seeds `cfg.seed, cfg.seed + 1, …`,
/// on up to `parallel` threads. Results do not depend on `parallel`.
pub fn run_repeated(
    graph: &HinGraph,
    cfg: &LoopConfig,
    runs: usize,
    parallel: usize,
) -> Result<RepeatedOutcome> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    cfg.validate()?;
    let configs: Vec<LoopConfig> = (0..runs as u64)
        .map(|i| LoopConfig {
            seed: cfg.seed.wrapping_add(i),
            ..cfg.clone()
        })
        .collect();
    let outcomes: Vec<LoopOutcome> = if parallel <= 1 {
        configs
            .iter()
            .map(|c| run_active_loop(graph, c))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            configs
                .par_iter()
                .map(|c| run_active_loop(graph, c))
                .collect::<Result<Vec<_>>>()
        })?
    };
    let aggregate = aggregate(&outcomes);
    Ok(RepeatedOutcome {
        runs: outcomes,
        aggregate,
    })
}
