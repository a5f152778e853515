//! Measurement-driven state steering.
//!
//! A system in an arbitrary mixed state is pushed onto one of a set of known
//! target pure states using nothing but projective measurements of two
//! non-commuting observables: one measurement of the target observable,
//! followed by `N` rounds of (intermediate observable, target observable).
//! The run stops at the first target outcome.
//!
//! The crate is split into:
//!
//! - [`state`]: pure states, density matrices, overlaps, distances, tensor
//!   products and random-state generation.
//! - [`bases`]: orthonormal measurement bases, the Fourier (complementary)
//!   basis, unbiasedness metrics, one-round overlap matrices and dephasing.
//! - [`protocol`]: trajectory sampling, the exact absorbing-chain evaluator
//!   and a brute-force outcome-tree oracle.
//! - [`formulas`]: closed-form success probabilities and Haar averages.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bases;
mod error;
pub mod formulas;
pub mod protocol;
pub mod rng;
pub mod state;

pub use bases::{
    basis_2d, dephase_in_basis, fourier_basis, hs_optimality_scan, overlap_matrix,
    unbiasedness_defect, OrthonormalBasis, OverlapMatrix, ScanResult,
};
pub use error::{Error, Result};
pub use protocol::{
    brute_force_success, build_markov, exact_success, exact_success_curve, measure_in_basis,
    monte_carlo_success, run_trajectory, BasisTag, MarkovModel, McEstimate, Outcome, Protocol,
    TrajectoryResult, TrajectorySampler,
};
pub use state::{
    haar_random_pure, hs_distance_sq, maximally_mixed, qubit_like_density, target_overlap,
    DensityMatrix, PureState, QuantumState, QubitLikeSpec, Tensor,
};

pub use num_complex::Complex64;

/// Default tolerance for algebraic identities.
pub const TOL: f64 = 1e-12;

/// Smallest eigenvalue accepted for a positive-semidefinite matrix.
pub const PSD_FLOOR: f64 = -1e-10;

/// Largest deviation of a probability vector's sum from one that is silently
/// renormalized.
pub const PROB_SUM_TOL: f64 = 1e-10;
