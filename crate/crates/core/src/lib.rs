//! Fermionic simulation on a Pauli-string state-vector engine.

pub mod dist;
pub mod error;
pub mod experiments;
pub mod fermion;
pub mod mapping;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod statevec;
pub mod ucc;

pub use error::{QsimError, Result};
pub use fermion::{FermionOp, FermionSum, Ladder};
pub use mapping::{fermion_to_pauli, Mapping};
pub use pauli::{Letter, PauliString, PauliSum, PauliTerm};
pub use statevec::{init_basis_state, Circuit, Gate1Q, GateKind, GateOp, StateVector};
