//! Numerical laboratory for small-scale formation in incompressible flows.
//!
//! The crate bundles four families of solvers together with verifiers for
//! the kernels and inequalities that drive their growth mechanisms:
//!
//! * [`spectral1d`]: periodic transforms, Hilbert transform, log-sine
//!   Biot-Savart convolution.
//! * [`models1d`]: CLM, De Gregorio, HL and CKY models, kernel and
//!   positivity verifiers, characteristic trackers, adaptive RK4 stepping.
//! * [`fields2d`]: 2D Euler on the unit disk with hyperbolic boundary point
//!   diagnostics, and a Boussinesq solver on a periodic strip.
//! * [`sqg_patch`]: contour dynamics for modified-SQG patches in the
//!   half-plane with barrier certification.
//!
//! [`diagnostics`] fits growth laws to time series and [`cli_io`] ties
//! everything to config files, CSV output and binary snapshots.

pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod fields2d;
pub mod models1d;
pub mod quadrature;
pub mod spectral1d;
pub mod sqg_patch;

pub use error::{Error, Result};
