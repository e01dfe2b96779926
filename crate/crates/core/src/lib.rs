//! Semantic world-graph construction from depth geometry and 2D detections.
//!
//! This crate holds the allocation-only core: pinhole geometry, DBSCAN
//! clustering, the concept taxonomy, detection records, detection-to-cluster
//! association and the world graph of object instances and typed triples.
//! File formats, vision providers and the command line live in the `semgraph`
//! companion crate.
#![no_std]
// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod association;
pub mod clustering;
pub mod detection;
mod error;
pub mod geometry;
pub mod taxonomy;
mod vec3;
pub mod worldgraph;

pub use error::{Error, Result};
pub use vec3::Vec3;
