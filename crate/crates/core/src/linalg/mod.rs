//! Eigensolvers used by the schedule and spin-model code.

pub mod dense;
pub mod lanczos;
pub mod sparse;
pub mod tridiag;

pub use dense::{symmetric_eigen, SymMatrix};
pub use lanczos::{lanczos_lowest, LanczosOptions, LanczosResult, LinearOperator};
pub use sparse::SparseSymmetric;
pub use tridiag::SymTridiagonal;
