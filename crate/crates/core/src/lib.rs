//! First-dissipation-time statistics of finite quantum systems with a decay channel.
//!
//! A Hermitian Hamiltonian `H` evolves a state that leaks out through the decay
//! state `|ψ_d>` at rate `Γ`. Started in `|ψ_d>`, the mean time until the first
//! emission is `w / (2Γ)`, where `w` counts the distinct energy levels that
//! overlap `|ψ_d>`. The modules follow the computation:
//!
//! * [`spectral`]: diagonalise `H` and reduce it to levels and overlaps.
//! * [`resolvent`]: the resolvent, its winding number and the electrostatic picture.
//! * [`poles`]: exact poles and residues of the Laplace-domain amplitude, plus the
//!   asymptotic pole regimes.
//! * [`stats`]: decay-time density, moments, conditional means, scaling functions.
//! * [`models`]: two-level atom, tight-binding ring and line, direct propagation.
//! * [`io`]: JSON schema for systems and CSV output with a JSON header.

pub mod error;
pub mod io;
pub mod models;
pub mod poles;
pub mod quadrature;
pub mod resolvent;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use models::{MultiChannelSystem, TwoLevelParams};
pub use poles::PoleSet;
pub use resolvent::WindingCurve;
pub use spectral::{Level, QuantumSystem, SpectralModel, C64};
pub use stats::{ConditionalMeanCurve, DecayTimeStats};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
