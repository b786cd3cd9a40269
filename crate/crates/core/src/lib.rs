//! Three-dimensional angle-of-arrival source localization.
//!
//! Each UAV measures the azimuth and elevation of the source. The two angles
//! define two planes through the UAV that (without noise) contain the source.
//! The crate provides:
//!
//! * [`geometry`]: angles, measurement planes, distances and angle Jacobians.
//! * [`estimators`]: the inscribed-sphere fixed-point estimator (CIS), the
//!   minimum-squared-distance least-squares estimator (MSD-LS) and its TLS
//!   variant, a tangent-form pseudolinear LS baseline and a Gauss-Newton MLE.
//! * [`bounds`]: Fisher information and the Cramér-Rao lower bound.
//! * [`montecarlo`]: seeded, order-independent Monte Carlo sweeps.
//! * [`config`], [`io`], [`report`]: sweep configuration files, scenario and
//!   measurement files, and CSV/JSON result tables.

pub mod bounds;
pub mod config;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod montecarlo;
pub mod par;
pub mod report;

pub use error::{Error, Result};
pub use geometry::{AngleMeasurementSet, AnglePair, Plane, PlaneSet, Point3};
pub use par::Execution;
