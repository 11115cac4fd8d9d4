use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch ({left_rows}x{left_cols} vs {right_rows}x{right_cols})")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("{op}: length mismatch ({left} vs {right})")]
    LengthMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}:{line}: edge endpoint `{id}` is not a known node", path.display())]
    DanglingEndpoint {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("{}:{line}: duplicate node id `{id}`", path.display())]
    DuplicateNode {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("{}:{line}: self-loop on node `{id}`", path.display())]
    SelfLoop {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("label {label} is out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("node {node} out of range (graph has {nodes} nodes)")]
    NodeOutOfRange { node: usize, nodes: usize },

    #[error("labeled set is empty")]
    EmptyLabeledSet,

    #[error("node {0} has no ground-truth label")]
    Unlabeled(usize),

    #[error("node {0} is already labeled")]
    AlreadyLabeled(usize),

    #[error("forward cache is stale: the model changed after the forward pass")]
    StaleCache,

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("checkpoint fingerprint {found} does not match graph fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that originate in input data rather than configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::DanglingEndpoint { .. }
                | Error::DuplicateNode { .. }
                | Error::SelfLoop { .. }
                | Error::LabelOutOfRange { .. }
                | Error::Io { .. }
                | Error::Unlabeled(_)
                | Error::FingerprintMismatch { .. }
        )
    }

    pub fn is_numeric_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::NonFinite(_))
    }
}
