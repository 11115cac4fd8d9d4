//! Dense/sparse linear algebra, activations and the Adam optimizer.

mod activation;
mod adam;
mod dense;
mod gradcheck;
mod sparse;

pub use activation::{relu, relu_mask, softmax_rows};
pub use adam::{adam_step, AdamParams, AdamState};
pub use dense::{dense_matmul, euclidean_distance, matmul_nt, matmul_tn, DenseMatrix};
pub(crate) use dense::squared_distance;
pub use gradcheck::finite_difference_gradient;
pub use sparse::{row_normalize, spmm, SparseMatrix};
