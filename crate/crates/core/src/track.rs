//! Trajectory domain types shared across the pipeline.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::embedding::EmbeddingVector;
use crate::geometry::BoundingBox;

/// Identifier of one camera in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CameraId(pub u32);

impl fmt::Display for CameraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One detection of a vehicle in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub frame: u32,
    pub box_: BoundingBox,
    pub embedding: Option<EmbeddingVector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackError {
    EmptyTracklet,
    UnorderedFrames { at: usize },
    InvalidBox { at: usize },
}

impl fmt::Display for TrackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackError::EmptyTracklet => write!(f, "tracklet must contain observations"),
            TrackError::UnorderedFrames { at } => {
                write!(f, "observation frames must strictly increase (index {at})")
            }
            TrackError::InvalidBox { at } => write!(f, "invalid bounding box (index {at})"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrackError {}

/// A camera-local vehicle trajectory: ordered observations plus an
/// optional trajectory-level appearance feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub camera: CameraId,
    pub local_id: u32,
    observations: Vec<FrameObservation>,
    pub feature: Option<EmbeddingVector>,
}

impl Tracklet {
    pub fn new(
        camera: CameraId,
        local_id: u32,
        observations: Vec<FrameObservation>,
    ) -> Result<Self, TrackError> {
        if observations.is_empty() {
            return Err(TrackError::EmptyTracklet);
        }
        for (i, obs) in observations.iter().enumerate() {
            if !obs.box_.is_valid() {
                return Err(TrackError::InvalidBox { at: i });
            }
            if i > 0 && observations[i - 1].frame >= obs.frame {
                return Err(TrackError::UnorderedFrames { at: i });
            }
        }
        Ok(Self {
            camera,
            local_id,
            observations,
            feature: None,
        })
    }

    pub fn observations(&self) -> &[FrameObservation] {
        &self.observations
    }

    pub fn first(&self) -> &FrameObservation {
        &self.observations[0]
    }

    pub fn last(&self) -> &FrameObservation {
        self.observations.last().unwrap()
    }

    pub fn first_frame(&self) -> u32 {
        self.first().frame
    }

    pub fn last_frame(&self) -> u32 {
        self.last().frame
    }

    pub fn overlaps_in_time(&self, other: &Tracklet) -> bool {
        self.first_frame() <= other.last_frame() && other.first_frame() <= self.last_frame()
    }

    /// Frame-ordered concatenation with a later tracklet. The caller
    /// guarantees `other` starts strictly after this tracklet ends.
    pub fn concat(&self, other: &Tracklet) -> Result<Tracklet, TrackError> {
        let mut obs = self.observations.clone();
        obs.extend(other.observations.iter().cloned());
        let mut merged = Tracklet::new(self.camera, self.local_id, obs)?;
        merged.feature = self.feature.clone();
        Ok(merged)
    }
}

/// One cross-camera identity: the set of single-camera tracklets that
/// share a global id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalTrack {
    pub global_id: u32,
    pub members: BTreeSet<(CameraId, u32)>,
}

impl GlobalTrack {
    pub fn new(global_id: u32, members: BTreeSet<(CameraId, u32)>) -> Self {
        debug_assert!(!members.is_empty());
        Self { global_id, members }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn obs(frame: u32) -> FrameObservation {
        FrameObservation {
            frame,
            box_: BoundingBox::new(0.0, 0.0, 10.0, 10.0),
            embedding: None,
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            Tracklet::new(CameraId(1), 1, vec![]),
            Err(TrackError::EmptyTracklet)
        ));
    }

    #[test]
    fn rejects_duplicate_frames() {
        assert!(matches!(
            Tracklet::new(CameraId(1), 1, vec![obs(5), obs(5)]),
            Err(TrackError::UnorderedFrames { at: 1 })
        ));
    }

    #[test]
    fn temporal_overlap() {
        let a = Tracklet::new(CameraId(1), 1, vec![obs(0), obs(10)]).unwrap();
        let b = Tracklet::new(CameraId(1), 2, vec![obs(10), obs(20)]).unwrap();
        let c = Tracklet::new(CameraId(1), 3, vec![obs(11), obs(20)]).unwrap();
        assert!(a.overlaps_in_time(&b));
        assert!(!a.overlaps_in_time(&c));
    }
}
