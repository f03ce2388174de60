//! Saturated output regulation for finite-dimensional impedance-passive systems.
//!
//! The crate computes the feedforward part `u_reg` of the control law
//! `u(t) = -κ e(t) + u_reg(t)` from transfer-function values of the plant,
//! solves and checks the associated regulator equations, and simulates the
//! closed loop with a radial input saturation. Two spectral-Galerkin case
//! studies (a boundary-controlled 2-D heat equation and a 1-D wave equation)
//! are included together with analytic transfer-function oracles.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod matrix_io;
pub mod models;
pub mod regulator;
pub mod saturation;
pub mod signal;
pub mod simulator;
pub mod state_space;
pub mod verify;

pub use error::{RegError, Result};
pub use models::{HeatModelConfig, WaveCoefficient, WaveModelConfig};
pub use regulator::{RegulatorCoefficients, RegulatorSolution};
pub use saturation::{SaturationChannel, SaturationSpec};
pub use signal::{Exosystem, Harmonic, SignalSpec};
pub use simulator::{Scheme, SimulationConfig, SimulationTrajectory, TrackingMetrics};
pub use state_space::{PassivityReport, StateSpaceModel, TransferValue};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
