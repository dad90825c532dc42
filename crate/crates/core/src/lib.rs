//! Classical restrictions of quantum spin-chain states.
//!
//! Measuring commuting single-site copies of an observable `X` in a quantum
//! state produces a classical probability distribution on configurations.
//! This crate builds those distributions for finite transverse-field Ising
//! chains (and generic translation-invariant 1-D interactions), extracts
//! classical potentials from them by inclusion-exclusion, probes their
//! (non-)locality, and evaluates the exact large-deviation generating function
//! of the Ising ground state through Toeplitz determinants.
//!
//! Module map:
//!
//! - [`spin_algebra`]: tensor-product operators, Hamiltonians, spectral projections.
//! - [`gibbs_engine`]: Gibbs and ground states and their classical restrictions.
//! - [`mobius_potential`]: weights, classical potentials, DLR checks, `beta_max`.
//! - [`ising_exact`]: free-fermion formulas, Toeplitz determinants, Szegő limit, rate function.
//! - [`locality_probe`]: conditional probabilities of the `σ^z` restriction.
//! - [`dyson_polymer`]: Dyson series, diagram densities, polymers, a Kotecký–Preis check.
//! - [`fcs_entanglement`]: finitely correlated states and conditioned correlations.
//! - [`cli`]: the `spinrestrict` command-line frontend.

pub mod cli;
pub mod dyson_polymer;
mod error;
pub mod fcs_entanglement;
pub mod gibbs_engine;
pub mod ising_exact;
mod lanczos;
pub mod locality_probe;
pub mod mobius_potential;
pub mod spin_algebra;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
