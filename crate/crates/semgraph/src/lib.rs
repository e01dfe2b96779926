//! Std companion to `semgraph-core`: dataset and taxonomy files, vision
//! providers, world persistence and graph export, the per-frame pipeline and
//! a synthetic dataset generator used as an end-to-end oracle.

pub mod config;
pub mod dataset;
pub mod depth_png;
mod error;
pub mod export;
pub mod hierarchy;
pub mod pipeline;
pub mod provider;
pub mod synthetic;
pub mod trajectory;
pub mod world_io;

pub use error::{Error, Result};
pub use semgraph_core as core;
