//! Dissipative dynamics of two non-interacting qubits coupled to a single
//! cavity mode, keeping the counter-rotating interaction terms.
//!
//! The crate provides two engines for the reduced two-qubit state:
//!
//! * [`model`] — a time-local master equation with memory-kernel
//!   coefficients, integrated directly on the 4×4 reduced state;
//! * [`oracle`] — a brute-force reference that evolves the full
//!   atoms ⊗ field system under the untruncated coupling Hamiltonian with a
//!   Fock-space photon cutoff and traces the field out.
//!
//! Entanglement is quantified by the Wootters concurrence ([`concurrence`]),
//! computed both from the general spin-flip construction and from the
//! closed form valid for X-structured states. [`sweep`] drives grids over
//! the initial-state parameter α² and detects entanglement
//! death/birth/revival events ([`events`]).

pub mod basis;
pub mod concurrence;
pub mod density;
pub mod error;
pub mod events;
pub mod integrator;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod sweep;

pub use error::{Error, Result};
