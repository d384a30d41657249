//! k-nearest-neighbor regression on the unit cube, with the tooling to check
//! its rate of convergence for Hölder-smooth regression functions.
//!
//! * [`smooth_model`]: smoothness classes and a catalog of test functions.
//! * [`sampler`]: i.i.d. data with uniform design and bounded noise variance.
//! * [`knn`]: the estimator, its `k` schedule and an exact k-d tree.
//! * [`geometry`]: balls clipped to the cube and the measure of small clipped balls.
//! * [`asymptotics`]: Beta/Gamma ratios and nearest-neighbor distance moments.
//! * [`rate_bench`]: risk estimation, rate sweeps and the bias/variance probe.
//! * [`verify`]: the acceptance checks, shared by the test suite and the CLI.

pub mod asymptotics;
pub mod error;
pub mod geometry;
pub mod knn;
pub mod rate_bench;
pub mod rng;
pub mod sampler;
pub mod smooth_model;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
