//! Spectral split-operator propagation of phase-space distributions.
//!
//! The crate evolves Wigner functions (Moyal equation), classical
//! distributions (Liouville equation), their time–energy extended
//! counterparts for non-stationary Hamiltonians, and phase-space
//! Schrödinger amplitudes. Every propagator is a Strang splitting of two
//! multiplicative kicks, each applied in a mixed direct/conjugate
//! representation where the corresponding generator is diagonal.

pub mod characteristics;
pub mod error;
pub mod expr;
pub mod grid;
pub mod kernels;
pub mod observables;
pub mod propagator;
pub mod scenarios;

pub use error::{Error, Result};
pub use expr::{HamiltonianModel, Params};
pub use grid::{make_grid, Axis, AxisLabel, AxisSpec, Direction, Field, PhaseGrid, Rep};
pub use propagator::{evolve, step, step_olavo, EvolutionMode, Propagator};
