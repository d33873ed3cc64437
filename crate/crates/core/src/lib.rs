//! Black-box optimization under Gaussian-process models by thresholded
//! domain shrinking.
//!
//! The optimizer walks an infinite binary tree of axis-aligned cells over
//! `[0,1]^d`, keeping only regions that plausibly contain function values
//! above a threshold that a range-space binary search tightens epoch by
//! epoch. Local decisions come from sequential GP confidence tests on
//! constant-size grids, so the per-step cost never grows with the horizon
//! the way a global UCB maximization does.
//!
//! Module map:
//! - [`kernel`]: covariance kernels and information-gain bounds;
//! - [`gp`]: incremental posterior inference and confidence widths;
//! - [`geometry`]: the cell tree, fill-distance schedule, discretization;
//! - [`seqtest`]: the local sequential test and its two-sided variants;
//! - [`rwt`]: the biased random walk identifying target leaves;
//! - [`threds`]: the epoch loop;
//! - [`bench`]: objectives, the IGP-UCB baseline, the experiment runner;
//! - [`config`]: defaults, key=value overrides, content hashing.

pub mod bench;
pub mod config;
pub mod error;
pub mod geometry;
pub mod gp;
pub mod kernel;
pub mod rwt;
pub mod seqtest;
pub mod threds;

pub use error::{Error, Result};
