//! Open-system quantum annealing of the weak-strong cluster problem.
//!
//! The crate follows one pipeline:
//!
//! 1. [`schedule`] builds A(s), B(s) from a compound-junction flux-qubit model.
//! 2. [`spin_model`] assembles the two-cell Hamiltonian, either exactly or in
//!    the permutation-symmetric column-spin subspace.
//! 3. [`spectral`] diagonalizes slices and finds the pointer basis.
//! 4. [`noise`] and [`niba`] turn pointer quantities into incoherent
//!    transition rates and integrate the two-level population equation.
//! 5. [`svmc`] and [`semiclassical`] provide the classical-path comparator:
//!    spin-vector Monte Carlo, the product-state potential, barriers and
//!    instanton gap estimates.
//!
//! [`experiments`] wires these into reproducible batch runs with CSV/JSON
//! output; the `qa-lab` binary is a thin front end over it.
//!
//! Energies are linear frequencies in GHz throughout; see [`units`].

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod niba;
pub mod noise;
pub mod quadrature;
pub mod roots;
pub mod schedule;
pub mod semiclassical;
pub mod special;
pub mod spectral;
pub mod spin_model;
pub mod svmc;
pub mod units;

pub use error::{Error, Result};
