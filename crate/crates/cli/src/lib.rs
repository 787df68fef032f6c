//! File formats, batch dataset driver and per-stage tools around
//! `seiswork-core`. The `seiswork` binary is a thin layer over this library.

pub mod checksum;
pub mod config;
pub mod dataset;
pub mod error;
pub mod f32r;
pub mod manifest;
pub mod render;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use f32r::{Kind, Raster};
