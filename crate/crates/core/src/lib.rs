//! Stabilizer-model toolkit for measurement-based quantum computation on
//! subsystem-symmetric lattice models: Pauli algebra, symmetry localization,
//! Lie closures, Ising-chain dualities, exact spectra, protocol simulation and
//! anyon invariants.

pub mod error;
pub mod f2;
pub mod cli;
pub mod duality;
pub mod lattice;
pub mod lie;
pub mod localization;
pub mod mbqc;
pub mod models;
pub mod pauli;
pub mod spectra;
pub mod sset;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
