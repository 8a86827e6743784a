//! Numerical laboratory for randomness of infinite qubit sequences.
//!
//! A *state* is a coherent sequence of density operators `ρ_n` on `n`
//! qubits. The crate provides the density-operator arithmetic, the state
//! constructors, finite-depth evaluators for projection-sequence tests and
//! the entropy bounds relating initial-segment entropy to those tests.

pub mod error;
pub mod infotheory;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod rtests;
pub mod serial;
pub mod states;

pub use error::{Error, Result};
