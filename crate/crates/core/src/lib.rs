//! Steady states of a laser whose gain medium is an interacting XXZ spin chain.
//!
//! `L` two-level emitters with nearest-neighbour hopping `J` and interaction `U`
//! are coupled with strength `g` to one cavity mode, pumped incoherently at
//! rate `P` per emitter while the cavity leaks at rate `κ`. Everything is
//! expressed in the frame rotating at the common resonance frequency, with
//! energies and rates in units of `J`.
//!
//! The crate provides
//! - [`hilbert`]: sparse operators on the spin ⊗ cavity space,
//! - [`model`]: Hamiltonians, dissipators and the vectorized Liouvillian,
//! - [`ness`]: the exact steady state from the trace-bordered linear system,
//! - [`trajectories`]: quantum-jump and diffusive unravelings,
//! - [`observables`]: photon statistics, magnetization, cooperativities,
//!   correlations and the eigenstate decomposition of the emitter state.

pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod ness;
pub mod observables;
pub mod sector;
pub mod trajectories;

mod error;

pub use error::{CutoffTrial, Error, Result};
pub use hilbert::{BosonKind, SpaceDescriptor, SparseOperator, SpinKind};
pub use model::{Boundary, LiouvillianMatrix, SystemParams};
pub use ness::{DensityMatrix, NessDiagnostics, NessOptions, NessSolution};

pub use num_complex::Complex64;

/// Version of this crate, stamped into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
