//! Quench dynamics of Rydberg atom arrays.
//!
//! The crate builds atom geometries, enumerates full and constrained
//! computational bases, assembles the Rydberg Hamiltonian on them and
//! propagates the all-zero product state. On top of that sit the analysis
//! layers: diagonal and island observables, thermal / prethermal / diagonal
//! ensembles, second-order perturbation theory of the resonances, the
//! effective 2-island Hamiltonian, the classical mean-field limit and a
//! parallel parameter-sweep driver.
//!
//! Units throughout: ħ = 1, energies in rad/μs, time in μs, lengths in μm.

pub mod classical;
pub mod config;
pub mod ensembles;
pub mod error;
pub mod evolve;
pub mod hamiltonian;
pub mod hilbert;
pub mod lattice;
pub mod observables;
pub mod resonance;
pub mod sweep;

pub use error::{Error, Result};
pub use hamiltonian::{CouplingRange, QuenchParams, RydbergModel, SparseOperator};
pub use hilbert::{BasisIndex, BasisKind, Bitstring};
pub use lattice::{GeometryKind, InteractionMatrix, LatticeSpec};

/// Complex amplitude type used for all state vectors.
pub type C64 = num_complex::Complex64;
