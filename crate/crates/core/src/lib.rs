//! Frame-consistent uncertainty-aware sampling of part-segmented RGB-D point
//! clouds, with baseline samplers, a synthetic articulated-scene simulator and
//! sampler quality metrics.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the benchmark
//! harness and the command-line tool live in the `fus` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod consistency;
pub mod error;
pub mod geometry;
pub mod lift;
pub mod metrics;
pub mod perception;
pub mod raster;
pub mod sampler;
pub mod simulator;
pub mod spatial;
pub mod uncertainty;

pub use error::{Error, Result};
pub use geometry::{CameraModel, Point, RigidTransform, Vector};
pub use raster::{
    DepthMap, Dims, PartId, PerPart, ProbabilityStack, SegmentationMap, UncertaintyMap,
};
