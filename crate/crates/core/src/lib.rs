// SPDX-License-Identifier: Apache-2.0

//! River water surface elevation (WSE) estimation from UAV photogrammetric
//! products.
//!
//! The crate covers the non-learning parts of the workflow:
//!
//! - [`raster`]: DSM (ESRI ASCII) and orthophoto (PGM + world file) grids,
//!   bilinear sampling and square patch extraction.
//! - [`linear_ref`]: polylines, chainage densification, projection and
//!   clipping.
//! - [`smoothing`]: forward-backward exponentially weighted moving average
//!   and standard deviation, iterative outlier rejection.
//! - [`regress`]: straight-line and piecewise polynomial least squares, and
//!   the standard error of estimate.
//! - [`metrics`]: RMSE, mean uncertainty, uncertainty calibration error.
//! - [`dataset`]: ML sample records, standardization, augmentation and the
//!   on-disk sample format.
//! - [`pipeline`]: ground-truth profiles, the water-edge estimator,
//!   prediction evaluation and leave-one-subset-out fold plans.

pub mod dataset;
pub mod error;
pub mod linear_ref;
pub mod metrics;
pub mod numfmt;
pub mod pipeline;
pub mod raster;
pub mod regress;
pub mod smoothing;

pub use error::{Error, Result};
