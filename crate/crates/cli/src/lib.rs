//! IO, file formats, configuration, synthetic scenario generation,
//! and pipeline orchestration for the `mtmct-core` tracking engine.

pub mod config;
pub mod formats;
pub mod pipeline;
pub mod scenario;
