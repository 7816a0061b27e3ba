//! Dimensionless 2D Gross–Pitaevskii propagation on a Cartesian grid.
//!
//! The real-time integrator is a symmetric (Strang) split step: a half step
//! of the diagonal potential + nonlinear factor, a Crank–Nicolson sweep of
//! the kinetic term along x, one along y, and a final diagonal half step.
//! In a rotating frame the exact rigid rotation `exp(iΩ_ext L_z dt)` is
//! applied after every step.

mod evolve;
mod field;
mod grid;
mod observables;
mod propagator;
mod radial;
mod rotation;
mod snapshot;
mod tridiag;

pub use evolve::{
    evolve, CollectingSink, EvolutionSink, EvolutionSummary, EvolveError, ObservableRow,
    ObservablesCsvSink, SinkError, SnapshotFileSink, OBSERVABLES_HEADER,
};
pub use field::ComplexField2D;
pub use grid::{Grid2D, DEFAULT_RING_MARGIN};
pub use observables::{chemical_potential, energy, kinetic_energy, ring_potential, RingSystem};
pub use propagator::{step_real_time, PropagationConfig, Propagator, Scheme};
pub(crate) use radial::radial_operator;
pub use radial::{solve_radial_eigenstate, RadialGrid, RadialRelaxation, RadialSolverConfig};
pub use rotation::{apply_rotation_factor, RotationOperator, DEFAULT_MAX_ROTATION_PER_STEP};
pub use snapshot::{
    read_snapshot, read_snapshot_file, write_density, write_field, Snapshot, SnapshotError,
    SnapshotHeader, SnapshotKind, SnapshotMeta,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Gpe2dError {
    #[error("grid needs at least 16 points per axis, got {nx}×{ny}")]
    GridTooSmall { nx: usize, ny: usize },
    #[error("grid extent must be finite and positive, got {extent_x}×{extent_y}")]
    BadExtent { extent_x: f64, extent_y: f64 },
    #[error("grid half-extent {half_extent} does not enclose ring radius {radius} plus margin {margin}")]
    RingNotEnclosed { half_extent: f64, radius: f64, margin: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid propagation config: {0}")]
    BadConfig(String),
    #[error("non-finite value after step {step}")]
    NonFinite { step: u64 },
    #[error("rotation angle {angle} per step exceeds cap {cap}")]
    RotationCapExceeded { angle: f64, cap: f64 },
    #[error("radial grid (r_max = {r_max}) does not cover ring radius {radius} plus margin {margin}")]
    RadialGridTooShort { r_max: f64, radius: f64, margin: f64 },
    #[error("radial relaxation did not converge after {iterations} iterations (last Δμ = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}
