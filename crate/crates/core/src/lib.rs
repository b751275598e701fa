//! Rendezvous trajectory generation for a fixed-wing UAV landing on a moving UGV.
//!
//! The crate is organised bottom-up:
//!
//! - [`models`]: vehicle parameters, wind triangle, decoupled UAV/UGV dynamics and trim analysis.
//! - [`scenarios`]: UGV paths, the two reference scenarios and JSON configuration.
//! - [`error_space`]: the coupled 9-state error dynamics, linearization and RK4 rollout.
//! - [`constraints`]: inequality residuals, the relaxed log barrier and activity reports.
//! - [`guidance`]: aggressiveness-indexed desired curve and the initial trajectory.
//! - [`trajopt`]: the projection-operator Newton solver with barrier continuation.
//! - [`validation`]: invariant suites shared by the test-suite and the command line.

pub mod constraints;
pub mod error_space;
pub mod guidance;
pub mod io;
pub mod models;
pub mod scenarios;
pub mod trajopt;
pub mod validation;

mod error;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// State dimension of the coupled error system.
pub const NX: usize = 9;
/// Input dimension of the coupled error system.
pub const NU: usize = 4;

pub type StateVec = nalgebra::SVector<f64, NX>;
pub type InputVec = nalgebra::SVector<f64, NU>;
pub type StateMat = nalgebra::SMatrix<f64, NX, NX>;
pub type InputMat = nalgebra::SMatrix<f64, NX, NU>;
