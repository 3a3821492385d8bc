//! Operators on `(spatial grid) ⊗ (spin) ⊗ (Fock)`: the x-dependent field
//! `Φ(G)`, minimal coupling, `T_A` and the Pauli-Fierz Hamiltonian.

pub mod assemble;
pub mod coupling;
pub mod operator;
pub mod space;

pub use assemble::{
    assemble_pauli_fierz, assemble_ta, resolvent_family, step1_commutator_operators,
    PauliFierzParams, QuadraticTermSign, Step1Operators, TaOperators,
};
pub use operator::{CompositeOperator, Node};
pub use space::CompositeSpace;
