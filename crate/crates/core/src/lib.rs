//! Simulation laboratory for the thermal stability of classical and quantum
//! memories.
//!
//! - [`lattice`]: Ising and toric-code models, energies, syndromes, logicals.
//! - [`dynamics`]: kinetic Monte Carlo of thermal spin-flip dynamics and
//!   memory lifetimes.
//! - [`exact`]: Markov generators, stationary states, spectral gaps and the
//!   driven two-level master equation.
//! - [`decoder`]: minimum-weight pairing and dressed logical readout.
//! - [`thermo`]: work and heat ledgers for Szilard-type protocols and
//!   trajectory entropy production.
//! - [`qtoolkit`]: density matrices, channels, entropy and trace-distance bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decoder;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod qtoolkit;
pub mod thermo;

pub use error::{Error, Result};
