//! Synthetic seismic data workbench.
//!
//! Pure numerical core: random layered velocity models with convex-hull salt
//! bodies, 2D acoustic finite-difference modeling, reverse-time migration,
//! image-quality metrics, level (magnitude) pruning and DARTS cell
//! discretization. Everything here is `no_std` + `alloc`; file formats, the
//! batch driver and the command line live in the `seiswork` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod field;
pub mod metrics;
pub mod nas;
pub mod pruner;
pub mod rng;
pub mod rtm;
pub mod velmodel;
pub mod wavesim;

pub use error::{Error, Result};
pub use field::{Field, Mask, Raster};
