//! Intrinsic dimension estimation with the manifold-adaptive FSA estimator.
//!
//! The local estimate at a sample point is `ln 2 / ln(R_2k / R_k)`, built
//! from its `k`-th and `2k`-th nearest-neighbor distances. Under a locally
//! uniform density the median of that estimate equals the intrinsic
//! dimension for every `k`, which motivates the median aggregate (mFSA).
//! Finite samples and hard boundaries still bias it downwards; the
//! [`calibration`] module fits an exponential correction on hypercube
//! sweeps (cmFSA).
//!
//! Modules:
//! - [`geometry`]: point clouds, periodic/hard distances, exact kNN.
//! - [`estimators`]: local estimates, median/mean/mode aggregation,
//!   Levina-Bickel and FSA maximum likelihood.
//! - [`distributions`]: analytic densities and cdfs of the estimates.
//! - [`calibration`]: correction fitting and application.
//! - [`synthdata`]: seeded manifold generators.
//! - [`benchmark`]: suite runs, MPE and error rate.
//! - [`timeseries`]: CSD, bandpass, delay embedding, space-time separation.

pub mod benchmark;
pub mod calibration;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod special;
pub mod synthdata;
pub mod timeseries;

pub use error::{Error, Result};
pub use geometry::{Boundary, PointCloud};
