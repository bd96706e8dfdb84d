//! Dense and sparse linear algebra used by the finite element pipeline.

mod cg;
mod dense;
mod eigen;
mod envelope;
mod sparse;

pub use cg::conjugate_gradient;
pub use dense::{cholesky_solve, DenseCholesky, DenseMatrix};
pub use eigen::{generalized_symmetric_eig, symmetric_eig, EigenPairs};
pub use envelope::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use sparse::SparseMatrix;
