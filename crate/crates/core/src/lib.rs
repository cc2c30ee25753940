//! Few-photon scattering off a two-level emitter side-coupled to a one-dimensional
//! bosonic continuum.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the physical parameters and single-photon coefficients.
//! * [`eigenstates`] evaluates the exact real-space n-photon scattering eigenstates
//!   and their many-body bound-state clusters.
//! * [`smatrix`] turns those eigenstates into wavepacket-convolved output amplitudes
//!   for every transmitted/reflected outcome sector.
//! * [`fock`] and [`coherent`] integrate the amplitudes into observables.
//! * [`oracle`] is an independent brute-force check: a discretized even-mode
//!   Hamiltonian propagated in time.
//! * [`cli`] is the batch front-end behind the `wqed` binary.
//!
//! Units are ħ = c = 1 throughout; energies, momenta and rates share one unit.

pub mod cli;
pub mod coherent;
pub mod eigenstates;
pub mod error;
pub mod fock;
pub mod model;
pub mod oracle;
pub mod pulses;
pub mod quadrature;
pub mod smatrix;

pub use error::{Error, Result};
pub use model::{GaussianPacket, PacketKind, SystemParams};

pub use num_complex::Complex64 as C64;
