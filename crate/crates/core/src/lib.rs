//! Core algorithms for detecting subsurface void-like defects in concrete
//! from time-series thermal imagery.
//!
//! Each pixel of a thermal recording is a temperature trace over time. The
//! pipeline reduces that trace to a handful of principal-component scores
//! (principal component thermography), then regresses pixel labels
//! (void = 1, solid = 0) with classical learners or a small multilayer
//! perceptron, producing a full-frame detection map.
//!
//! The crate is `no_std` (with `alloc`) and fully deterministic: every
//! stochastic step draws from an explicitly seeded generator, so a run is
//! reproducible bit for bit from one master seed.
//!
//! Stages:
//!
//! 1. [`cube`]: thermal cube storage, spatial binning, raster reshaping.
//! 2. [`pct`]: PCA over the time dimension, component selection, scaling.
//! 3. [`labeling`]: rectangular ROI labels and training-set extraction.
//! 4. [`models`]: classical regression learners with 10-fold CV.
//! 5. [`mlp`]: 10-10-4-1 perceptron trained by adaptive gradient descent.
//! 6. [`synth`]: physics-based synthetic scene generator (1-D conduction).
//! 7. [`eval`]: detection maps, thresholds, segmentation metrics.

#![cfg_attr(not(test), no_std)]
// Indexed loops mirror the matrix arithmetic throughout; iterator rewrites
// obscure more than they help here.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod cube;
pub mod error;
pub mod eval;
pub mod labeling;
mod linalg;
pub mod matrix;
pub mod mlp;
pub mod models;
pub mod pct;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
