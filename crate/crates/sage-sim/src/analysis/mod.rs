//! Fitting, benchmarking statistics, two-qubit gate invariants, and
//! effective-Hamiltonian extraction.

pub mod fit;
pub mod makhlin;
pub mod sw;

pub use fit::{fit_gaussian_decay_xy, fit_rb_decay, GaussianDecayFit, RbDecayFit};
pub use makhlin::{
    average_gate_fidelity, bell_basis_q, cnot_deviation, cnot_matrix, gate_leakage,
    leakage_free_fidelity, makhlin_invariants, polar_unitarize, MakhlinInvariants,
};
pub use sw::{
    exact_block_diagonalization, schrieffer_wolff, EffectiveHamiltonian, Pauli,
    PauliDecomposition,
};
