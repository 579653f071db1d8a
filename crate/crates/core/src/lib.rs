//! Numerical laboratory for the screened scalar sedimentation corrector.
//!
//! A realization is a hardcore point set in a periodic box ([`pointgen`]),
//! rasterized into unit-volume inclusions on a lattice ([`lattice`]). The
//! massive corrector is then solved with the field constant on each
//! inclusion and a prescribed net flux through its boundary ([`solver`]).
//! [`oracles`] holds independent reference solutions, [`linearized`] the
//! spectral solvers for the linearized models, and [`ensemble`] the Monte
//! Carlo driver with scaling fits.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod io;
pub mod lattice;
pub mod linearized;
pub mod oracles;
pub mod parallel;
pub mod pointgen;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use lattice::{Geometry, Grid, RasterPolicy};
pub use pointgen::{PointSet, ProcessKind, SaturationRule};
pub use solver::{Field, OperatorSpec, SolveResult};
