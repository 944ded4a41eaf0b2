pub mod circuit;
pub mod clifford;
pub mod error;
pub mod exact;
pub mod hamiltonian;
pub mod lattice;
pub mod observables;
pub mod pauli;
pub mod term_spec;
pub mod transform;
pub mod trotter;

pub use error::{Error, Result};
