//! Lattice doublet-field neural net.
//!
//! Each site of an L×L lattice carries a complex two-component field
//! `(psi_u, psi_d)`. The field evolves under a discretized Pauli equation with
//! an external input field plus a Weiss mean field proportional to the
//! net magnetization. A heat-bath annealer on top of the field writes
//! patterns as separate ground-state snapshots and recalls any of them
//! from a noisy cue.
//!
//! Module map:
//! - [`lattice`], [`pattern`], [`field`]: the lattice, binary patterns and
//!   the doublet field with its observables.
//! - [`dynamics`]: norm-preserving integration of the field.
//! - [`annealing`]: Fermi activation, Glauber sweeps and annealing schedules.
//! - [`memory`]: writing and recalling memories.
//! - [`experiments`]: seeded experiment harness.
//! - [`config`], [`io`]: run configuration and file formats.

pub mod annealing;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod field;
pub mod io;
pub mod lattice;
pub mod memory;
pub mod pattern;

pub use error::{Error, Result};

/// Seeded generator used throughout. ChaCha output is stable across
/// platforms, which keeps reports bitwise reproducible.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
