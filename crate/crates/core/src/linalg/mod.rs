//! Finite-dimensional complex linear algebra on qubit registers.

pub mod caps;
pub mod density;
pub mod matrix;
pub mod projection;
pub mod spectrum;
pub mod sum;

pub use density::{pure_state, validate_density, DensityOperator, Repr, DEFAULT_TOL};
pub use matrix::{kron_vec, qubits_for_dim, tensor, ComplexMatrix};
pub use projection::{projection_weight, tau_weight, ProjRepr, Projection};
pub use spectrum::{
    eigendecompose, shannon_entropy, top_k_projector, top_k_sum, von_neumann_entropy, Spectrum,
    SpectrumBasis,
};
