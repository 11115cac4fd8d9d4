use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::aqhn::{CandidateSet, Criterion};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCandidates {
    pub criterion: Criterion,
    pub nodes: Vec<usize>,
    pub scores: Vec<f64>,
}

impl From<&CandidateSet> for AuditCandidates {
    fn from(c: &CandidateSet) -> Self {
        Self {
            criterion: c.criterion,
            nodes: c.nodes.clone(),
            scores: c.scores.clone(),
        }
    }
}

/// One JSON line per iteration `r`.
///
/// `delta`, `delta_union` and `rewards` measure the effect of the batch
/// queried in this iteration (`query`), and are absent in iteration 1. The
/// `candidates`, `mean_reward`, `expected_reward` and `next_query` fields
/// describe how the batch for iteration `r + 1` was chosen; `queried_counts`
/// is `n_λ` after that choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub iteration: usize,
    pub query: Vec<usize>,
    pub query_per_arm: Vec<Vec<usize>>,
    pub delta: Option<Vec<f64>>,
    pub delta_union: Option<f64>,
    pub rewards: Option<Vec<f64>>,
    pub candidates: Vec<AuditCandidates>,
    pub mean_reward: Option<Vec<f64>>,
    pub expected_reward: Option<Vec<f64>>,
    pub next_query: Vec<usize>,
    pub next_query_per_arm: Vec<Vec<usize>>,
    pub queried_counts: Vec<usize>,
}

impl AuditRecord {
    pub fn write_jsonl<W: Write>(records: &[AuditRecord], mut out: W) -> Result<()> {
        for r in records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(serde_json::Error::io)?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Vec<AuditRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Into::into))
            .collect()
    }
}
