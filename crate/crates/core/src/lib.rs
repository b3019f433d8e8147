//! Core algorithms for offline multi-target multi-camera tracking of
//! vehicles: zone discovery, traffic-aware single-camera re-linking,
//! camera link model construction, ReID feature math, cross-camera
//! association, and identity-based evaluation metrics.
//!
//! The crate is `no_std`-compatible (with `alloc`); all IO, file
//! formats, and the CLI live in the companion `mtmct` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assoc;
pub mod clm;
pub mod embedding;
pub mod geometry;
pub mod metrics;
pub mod reid;
pub mod track;
pub mod tsct;
pub mod zones;

mod fmath;

pub use embedding::EmbeddingVector;
pub use geometry::{BoundingBox, Rect};
pub use track::{CameraId, FrameObservation, GlobalTrack, Tracklet};
