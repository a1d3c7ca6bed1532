//! Learning the edge structure of pairwise graphical models over mixed
//! continuous and categorical data.
//!
//! The crate is `no_std` (with `alloc`). It contains the model itself, the
//! penalized pseudolikelihood and exact likelihood objectives, group-lasso
//! penalties with calibrated weights, proximal gradient and proximal Newton
//! solvers, regularization paths, and a sampler for synthetic data. File
//! formats and the command line live in the `mixgm-cli` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

extern crate alloc;

pub mod crf;
pub mod error;
pub mod linalg;
pub mod math;
pub mod mle;
pub mod model;
pub mod nodewise;
pub mod optimize;
pub mod pseudolikelihood;
pub mod regularization;
pub mod sampler;
pub mod schema;
pub mod theta;

pub use error::{Error, Result};
pub use schema::{Dataset, DummyEncodedRow, FeatureMatrix, MixedRow, Observation, Schema};
pub use theta::{EdgeGroup, GroupKind, Layout, Theta, Variable};
