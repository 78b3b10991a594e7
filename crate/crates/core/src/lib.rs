//! Compile "minimize the maximum of several quadratic binary objectives" into
//! a single diagonal Pauli-Z Hamiltonian `Σ_m h_m^p`, and check the result
//! against brute force.
//!
//! The pipeline is: build a [`MultiObjectiveProblem`] (directly or through
//! [`generators`]), shift it non-negative, expand with one of the routes in
//! [`expansion`], then inspect it with [`oracle`] or minimize it with
//! [`annealer`]. [`experiment`] runs batch studies of the approximation error.

pub mod annealer;
pub mod error;
pub mod expansion;
pub mod experiment;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod qubo;
pub mod rng;

pub use error::{MoqaError, Result};
pub use expansion::{
    expand, expand_dense, expand_product, expand_sparse, symmetry_reduced_expand, ExpansionMethod,
    PauliMask, SparsePauliHamiltonian,
};
pub use qubo::{BitVector, IsingObjective, MultiObjectiveProblem, QuboMatrix, ShiftMode, SpinVector};

/// Library version recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
