//! Simulation core for bosonic quantum neural networks with Kerr nonlinearity.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! * [`fock`]: truncated multimode Fock bases, canonical states, partial traces.
//! * [`operator`]: sparse complex operators on a [`fock::Basis`].
//! * [`dynamics`]: network Hamiltonian, Lindblad master-equation and mean-field integrators.
//! * [`readout`]: occupations, measurement noise, linear readouts, passive mode mixing
//!   and vacuum conditioning.
//! * [`wigner`]: Wigner functions on phase-space grids and the normalized Wigner distance.
//! * [`train`]: XOR readout training, cat-state mixing optimization and nonlinearity sweeps.
//!
//! Units: `hbar = 1`, energies and rates in units of the decay rate `gamma`,
//! times in units of `1/gamma`.

#![no_std]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod fock;
mod integrate;
pub mod linalg;
pub mod operator;
pub mod readout;
pub mod seed;
pub mod train;
pub mod wigner;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
