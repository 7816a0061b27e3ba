//! Simulation and inference toolkit for imbalanced counter-rotating OAM
//! superpositions of a Bose–Einstein condensate in a ring trap.
//!
//! The crate is organised by stage of the sensing chain:
//!
//! - [`units`]: laboratory ↔ dimensionless conversions and validity checks.
//! - [`gpe2d`]: split-step Crank–Nicolson propagation of the 2D GPE, radial
//!   eigenstates, conserved-quantity diagnostics and the snapshot file format.
//! - [`modes`]: OAM mode fields, superposition preparation and projections.
//! - [`fsm`]: the four-state model, the coherence equations, the cubic
//!   characteristic equation and the general odd-winding truncation.
//! - [`measurement`]: estimators that work from density images only.
//! - [`sensing`]: inversion of measured quantities into interaction strength,
//!   scattering length, magnetic field and external rotation.
//!
//! All quantities are dimensionless unless stated otherwise: lengths in
//! units of the radial oscillator length `σ = sqrt(ħ/(mω))`, energies in `ħω`
//! and times in `1/ω`.

pub mod fsm;
pub mod gpe2d;
pub mod measurement;
pub mod modes;
pub mod sensing;
pub mod units;

pub use num_complex::Complex64;
