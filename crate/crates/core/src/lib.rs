//! Simulation and analysis toolkit for the non-equilibrium phases of a
//! cavity-mediated collective XY spin model.
//!
//! An ensemble of two-level atoms coupled to a common far-detuned cavity mode
//! realizes the Hamiltonian `H = χ J⁺J⁻ + Ω Jx + Ω′ Jy − δ Jz` after adiabatic
//! elimination of the cavity field. Quenching the drive Ω across the critical
//! value `Ω_c = χN/2` switches the long-time dynamics between a ferromagnetic
//! phase (Bloch vector trapped below the equator) and a paramagnetic phase
//! (full circulation of the Bloch sphere).
//!
//! The crate provides four interchangeable dynamical models behind the
//! [`engine::Engine`] trait, selected by name at runtime:
//!
//! * `collective` — ideal mean-field Bloch dynamics of the collective model,
//! * `ensemble-adiabatic` — per-site mean field with inhomogeneous couplings
//!   and single-particle decoherence, cavity eliminated,
//! * `ensemble-full-cavity` — same, but with the cavity fluctuation field kept
//!   as an explicit dynamical variable,
//! * `motion` — per-site density matrices over harmonic trap levels ⊗ spin,
//!   capturing level-changing photon exchange (axial motion).
//!
//! Exact quantum references (Dicke-basis evolution, small Lindblad master
//! equations) live in [`oracle`] and anchor every mean-field approximation.

pub mod analysis;
pub mod bloch;
pub mod checks;
pub mod config;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod fitting;
pub mod linalg;
pub mod motion;
pub mod ode;
pub mod oracle;
pub mod output;
pub mod params;
pub mod protocol;
pub mod rng;
pub mod trajectory;
pub mod units;

pub use error::{Error, Result};
pub use params::{DerivedCouplings, ModelParams, TrapParams};
pub use trajectory::Trajectory;
