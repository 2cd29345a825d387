//! Simulation of a two-slit weak momentum measurement on atoms.
//!
//! * [`wavefield`]: analytic two-slit wavefunction and its local fields
//!   (Bohm and osmotic momenta, quantum potential, Hamilton-Jacobi residual).
//! * [`bohm_dynamics`]: Born-rule sampling and RK4 Bohm trajectories.
//! * [`weak_measurement`]: two-level pointer coupling, complementary readout,
//!   binomial counts and the arcsin estimator.
//! * [`reconstruction`]: scanned weak-momentum grids and flow-line
//!   reconstruction compared against exact trajectories.
//! * [`field_mode`]: a single field mode with a complex amplitude beable.
//! * [`io`]: configuration, pipeline orchestration and CSV/JSON output.

// `!(x > 0.0)` style checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohm_dynamics;
pub mod error;
pub mod field_mode;
pub mod io;
pub mod ode;
pub mod reconstruction;
pub mod rng;
pub mod stats;
pub mod wavefield;
pub mod weak_measurement;

pub use error::{Error, Result};
pub use wavefield::{FieldSample, WaveModel, WaveParams};
