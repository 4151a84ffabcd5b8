//! Dense operator algebra over `n` spins.
//!
//! Spin 1 is the leftmost tensor factor and the most significant bit of a
//! basis index; every other module relies on this ordering.

mod operator;
mod pauli;

pub use operator::{
    compose, equal_up_to_global_phase, pauli_coefficients, pauli_exponential, pauli_matrix,
    Operator, PauliCoefficients, PhaseVerdict, COEFFICIENT_CUTOFF,
};
pub use pauli::{all_pauli_strings, Pauli, PauliString};
