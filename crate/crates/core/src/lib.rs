//! Finite truncations of bosonic Fock space and of the Pauli-Fierz
//! Hamiltonian, with numerical certification of the commutator identities,
//! operator-norm inequalities and relative bounds that control its domain.

pub mod config;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod one_particle;
pub mod particle;
pub mod pauli_fierz;
pub mod par;
pub mod rng;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::C64;
