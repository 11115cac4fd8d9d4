//! Active heterogeneous network embedding.
//!
//! The network is split into homogeneous and bipartite sub-networks
//! ([`hingraph`]), embedded by per-sub-network K-order graph convolutions
//! whose outputs are concatenated layer by layer ([`dhne`]), and labels are
//! acquired from an oracle by a bandit that mixes three query strategies
//! ([`aqhn`], [`alloop`]).

pub mod alloop;
pub mod aqhn;
pub mod dhne;
pub mod error;
pub mod hingraph;
pub mod numerics;
pub mod seed;

pub use alloop::{
    run_active_loop, run_repeated, LoopConfig, LoopOutcome, RetrainMode, Split, Strategy,
};
pub use aqhn::{AuditRecord, BanditState, CandidateSet, Criterion};
pub use dhne::{DhneConfig, DhneModel};
pub use error::{Error, Result};
pub use hingraph::{HinGraph, SubNetwork, SynthParams};
pub use numerics::{DenseMatrix, SparseMatrix};
