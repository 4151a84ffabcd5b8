//! Compiler and exact simulator for Ising-type spin processors.
//!
//! Spin indices are 1-based everywhere in the public API. Frequencies are in
//! Hz, times in seconds, angles in radians.

pub mod angle;
pub mod decompose;
pub mod error;
pub mod quantum;
pub mod refocus;
pub mod sequence;
pub mod simulate;
pub mod spectro;
pub mod spin_system;

pub use decompose::{
    compile_four_body, decompose_chain, verify_decomposition, CompileOptions, DecompositionReport,
    FourBodyRealization, Variant,
};
pub use error::{Error, Result};
pub use quantum::{Operator, Pauli, PauliString};
pub use sequence::{Instruction, PulseSequence};
pub use simulate::{DeviationState, ErrorModel, EvolutionMode};
pub use spin_system::{FourBodyTarget, SpinSystem};
