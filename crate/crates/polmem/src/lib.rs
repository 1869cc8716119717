//! Simulation library for collective quantum memories for photons.
//!
//! Models an ensemble of N three-level atoms coupled to a single cavity
//! mode, with photon states stored as dark-state polariton excitations.
//! Two engines are provided: an exact truncated-Hilbert-space spin engine
//! ([`statespace`]) and a multimode bosonic engine ([`bosonic`]) in which
//! the polariton mode change is an exact unitary and the partial trace
//! over bright polaritons is a genuine partial trace.
//!
//! On top of the engines sit polariton constructors and meters
//! ([`polariton`]), single-atom decoherence channels ([`channels`]),
//! time evolution ([`dynamics`]) and fidelity/scaling analysis
//! ([`analysis`]). The `polmem` binary (see [`cli`]) runs the registered
//! experiments and emits CSV/JSON.

pub mod analysis;
pub mod bosonic;
pub mod channels;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod polariton;
pub mod statespace;

pub use error::{Error, Result};

/// Complex double, the amplitude scalar used everywhere.
pub type C64 = num_complex::Complex64;
