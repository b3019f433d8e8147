//! Traffic-aware single-camera re-linking.
//!
//! Vehicles that stop inside a traffic-aware zone come out of the
//! single-camera tracker as isolated fragments. A per-zone queue keeps
//! the ordering and tail appearance of tracklets that end inside the
//! zone; when a fragment later starts inside the same zone, the closest
//! queued candidate (by feature distance) is re-linked to it.

use alloc::vec::Vec;
use core::fmt;

use crate::embedding::{feature_distance, EmbeddingVector};
use crate::track::{TrackError, Tracklet};
use crate::zones::{Zone, ZoneKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelinkParams {
    /// Maximum feature distance to accept a re-link.
    pub sim_threshold: f64,
    /// Maximum dwell inside the zone, in frames.
    pub max_gap: u32,
    /// Break near-ties (within 5% relative distance) by queue order.
    pub use_order_prior: bool,
    /// Number of boundary frames averaged into the matching feature.
    pub clip_length: usize,
}

impl Default for RelinkParams {
    fn default() -> Self {
        Self {
            sim_threshold: 0.35,
            max_gap: 600,
            use_order_prior: true,
            clip_length: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueEntry {
    pub local_id: u32,
    pub last_frame: u32,
    pub feature: EmbeddingVector,
    /// Index of the tracklet group this entry belongs to.
    pub group: usize,
}

/// Ordered store of tracklets that ended inside one traffic-aware zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneQueue {
    pub zone_id: u32,
    entries: Vec<QueueEntry>,
}

impl ZoneQueue {
    pub fn new(zone_id: u32) -> Self {
        Self {
            zone_id,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    /// A tracklet ended inside the zone: record its tail.
    pub fn push(&mut self, entry: QueueEntry) {
        debug_assert!(self
            .entries
            .last()
            .map(|e| e.last_frame <= entry.last_frame)
            .unwrap_or(true));
        debug_assert!(self.entries.iter().all(|e| e.local_id != entry.local_id));
        self.entries.push(entry);
    }

    /// Drop entries whose dwell would exceed `max_gap` at `now`.
    pub fn evict_older_than(&mut self, now: u32, max_gap: u32) {
        self.entries
            .retain(|e| now.saturating_sub(e.last_frame) <= max_gap);
    }

    /// A tracklet started inside the zone: pick the queued candidate
    /// with minimum feature distance, subject to the threshold and a
    /// positive frame gap. The accepted entry is removed; others stay.
    pub fn match_start(
        &mut self,
        start_frame: u32,
        feature: &EmbeddingVector,
        params: &RelinkParams,
    ) -> Option<QueueEntry> {
        self.evict_older_than(start_frame, params.max_gap);
        let mut best: Option<(usize, f64)> = None;
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.last_frame >= start_frame {
                continue; // gap must be strictly positive
            }
            let d = match feature_distance(&entry.feature, feature) {
                Ok(d) => d,
                Err(_) => continue,
            };
            if d >= params.sim_threshold {
                continue;
            }
            match best {
                None => best = Some((i, d)),
                Some((_, bd)) if d < bd => best = Some((i, d)),
                _ => {}
            }
        }
        let (best_idx, best_d) = best?;
        let chosen = if params.use_order_prior {
            // earliest queued entry among near-ties wins (FIFO prior)
            self.entries
                .iter()
                .enumerate()
                .find(|(_, e)| {
                    e.last_frame < start_frame
                        && feature_distance(&e.feature, feature)
                            .map(|d| d < params.sim_threshold && d <= best_d * 1.05)
                            .unwrap_or(false)
                })
                .map(|(i, _)| i)
                .unwrap_or(best_idx)
        } else {
            best_idx
        };
        Some(self.entries.remove(chosen))
    }
}

/// One accepted re-link, for the audit report.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    pub zone_id: u32,
    pub from_local_id: u32,
    pub to_local_id: u32,
    pub gap_frames: u32,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelinkOutcome {
    pub tracklets: Vec<Tracklet>,
    pub merges: Vec<MergeRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelinkError {
    MixedCameras,
    Track(TrackError),
}

impl fmt::Display for RelinkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelinkError::MixedCameras => write!(f, "relink input spans multiple cameras"),
            RelinkError::Track(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RelinkError {}

fn boundary_feature(t: &Tracklet, clip_length: usize, tail: bool) -> Option<EmbeddingVector> {
    let obs = t.observations();
    let with_emb: Vec<&EmbeddingVector> = if tail {
        obs.iter()
            .rev()
            .take(clip_length)
            .filter_map(|o| o.embedding.as_ref())
            .collect()
    } else {
        obs.iter()
            .take(clip_length)
            .filter_map(|o| o.embedding.as_ref())
            .collect()
    };
    if with_emb.is_empty() {
        return None;
    }
    EmbeddingVector::mean(with_emb).ok()
}

fn zone_containing(zones: &[&Zone], point: (f64, f64)) -> Option<u32> {
    zones
        .iter()
        .find(|z| z.rect.contains(point.0, point.1))
        .map(|z| z.id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Start,
    End,
}

/// Reconnect fragments across traffic-aware zones of one camera.
///
/// Output tracklets are frame-ordered concatenations of input chains;
/// observations are conserved. Only zones classified traffic-aware
/// participate.
pub fn relink(
    tracklets: &[Tracklet],
    zones: &[Zone],
    params: &RelinkParams,
) -> Result<RelinkOutcome, RelinkError> {
    if let Some(first) = tracklets.first() {
        if tracklets.iter().any(|t| t.camera != first.camera) {
            return Err(RelinkError::MixedCameras);
        }
    }
    let ta_zones: Vec<&Zone> = zones
        .iter()
        .filter(|z| z.kind == ZoneKind::TrafficAware)
        .collect();

    // next[i] = index of the fragment appended after i; prev marks heads
    let n = tracklets.len();
    let mut next: Vec<Option<usize>> = alloc::vec![None; n];
    let mut has_prev: Vec<bool> = alloc::vec![false; n];
    let mut merges = Vec::new();

    if !ta_zones.is_empty() {
        let mut queues: Vec<ZoneQueue> = ta_zones.iter().map(|z| ZoneQueue::new(z.id)).collect();
        fn queue_index(queues: &[ZoneQueue], zone_id: u32) -> usize {
            queues.iter().position(|q| q.zone_id == zone_id).unwrap()
        }

        // chronological sweep; at equal frames starts run before ends,
        // which cannot create zero-gap matches (gap > 0 is enforced)
        let mut events: Vec<(u32, EventKind, usize)> = Vec::with_capacity(2 * n);
        for (i, t) in tracklets.iter().enumerate() {
            events.push((t.first_frame(), EventKind::Start, i));
            events.push((t.last_frame(), EventKind::End, i));
        }
        events.sort();

        for (frame, kind, i) in events {
            let t = &tracklets[i];
            match kind {
                EventKind::Start => {
                    let Some(zone_id) = zone_containing(&ta_zones, t.first().box_.center()) else {
                        continue;
                    };
                    let Some(feature) = boundary_feature(t, params.clip_length, false) else {
                        continue;
                    };
                    let qi = queue_index(&queues, zone_id);
                    if let Some(entry) = queues[qi].match_start(frame, &feature, params) {
                        let d = feature_distance(&entry.feature, &feature).unwrap();
                        merges.push(MergeRecord {
                            zone_id,
                            from_local_id: entry.local_id,
                            to_local_id: t.local_id,
                            gap_frames: frame - entry.last_frame,
                            distance: d,
                        });
                        next[entry.group] = Some(i);
                        has_prev[i] = true;
                    }
                }
                EventKind::End => {
                    let Some(zone_id) = zone_containing(&ta_zones, t.last().box_.center()) else {
                        continue;
                    };
                    let Some(feature) = boundary_feature(t, params.clip_length, true) else {
                        continue;
                    };
                    let qi = queue_index(&queues, zone_id);
                    queues[qi].evict_older_than(frame, params.max_gap);
                    queues[qi].push(QueueEntry {
                        local_id: t.local_id,
                        last_frame: frame,
                        feature,
                        group: i,
                    });
                }
            }
        }
    }

    // assemble chains from their heads
    let mut out = Vec::new();
    for head in 0..n {
        if has_prev[head] {
            continue;
        }
        let mut merged = tracklets[head].clone();
        let mut cur = head;
        while let Some(j) = next[cur] {
            merged = merged.concat(&tracklets[j]).map_err(RelinkError::Track)?;
            cur = j;
        }
        out.push(merged);
    }
    out.sort_by_key(|t| (t.first_frame(), t.local_id));
    Ok(RelinkOutcome {
        tracklets: out,
        merges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, Rect};
    use crate::track::{CameraId, FrameObservation};
    use alloc::vec;

    fn emb(v: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    fn ta_zone(id: u32) -> Zone {
        Zone {
            id,
            camera: CameraId(1),
            rect: Rect::new(400.0, 400.0, 600.0, 600.0),
            n_entry: 5,
            n_exit: 5,
            kind: ZoneKind::TrafficAware,
        }
    }

    fn obs_at(frame: u32, cx: f64, cy: f64, e: &[f64]) -> FrameObservation {
        FrameObservation {
            frame,
            box_: BoundingBox::new(cx - 10.0, cy - 10.0, 20.0, 20.0),
            embedding: Some(emb(e)),
        }
    }

    fn fragment(id: u32, frames: (u32, u32), from: (f64, f64), to: (f64, f64), e: &[f64]) -> Tracklet {
        Tracklet::new(
            CameraId(1),
            id,
            vec![obs_at(frames.0, from.0, from.1, e), obs_at(frames.1, to.0, to.1, e)],
        )
        .unwrap()
    }

    #[test]
    fn merges_exact_feature_match() {
        let a = fragment(1, (0, 100), (10.0, 500.0), (500.0, 500.0), &[1.0, 0.0]);
        let b = fragment(2, (130, 200), (500.0, 500.0), (990.0, 500.0), &[1.0, 0.0]);
        let out = relink(&[a, b], &[ta_zone(0)], &RelinkParams::default()).unwrap();
        assert_eq!(out.tracklets.len(), 1);
        assert_eq!(out.tracklets[0].observations().len(), 4);
        assert_eq!(out.merges.len(), 1);
        assert_eq!(out.merges[0].gap_frames, 30);
        assert_eq!(out.merges[0].distance, 0.0);
    }

    #[test]
    fn threshold_rejection_keeps_fragments() {
        let params = RelinkParams::default();
        let a = fragment(1, (0, 100), (10.0, 500.0), (500.0, 500.0), &[1.0, 0.0]);
        let far = [1.0 + params.sim_threshold * 10.0, 0.0];
        let b = fragment(2, (130, 200), (500.0, 500.0), (990.0, 500.0), &far);
        let out = relink(&[a.clone(), b.clone()], &[ta_zone(0)], &params).unwrap();
        assert_eq!(out.tracklets, vec![a, b]);
        assert!(out.merges.is_empty());
    }

    #[test]
    fn start_on_empty_queue_stays_isolated() {
        let b = fragment(2, (130, 200), (500.0, 500.0), (990.0, 500.0), &[1.0, 0.0]);
        let out = relink(&[b.clone()], &[ta_zone(0)], &RelinkParams::default()).unwrap();
        assert_eq!(out.tracklets, vec![b]);
    }

    #[test]
    fn gap_beyond_max_is_rejected() {
        let params = RelinkParams {
            max_gap: 20,
            ..RelinkParams::default()
        };
        let a = fragment(1, (0, 100), (10.0, 500.0), (500.0, 500.0), &[1.0, 0.0]);
        let b = fragment(2, (130, 200), (500.0, 500.0), (990.0, 500.0), &[1.0, 0.0]);
        let out = relink(&[a, b], &[ta_zone(0)], &params).unwrap();
        assert_eq!(out.tracklets.len(), 2);
    }

    #[test]
    fn queue_picks_argmin_of_two() {
        let mut q = ZoneQueue::new(0);
        q.push(QueueEntry {
            local_id: 1,
            last_frame: 100,
            feature: emb(&[1.0, 0.0]),
            group: 0,
        });
        q.push(QueueEntry {
            local_id: 2,
            last_frame: 110,
            feature: emb(&[0.0, 1.0]),
            group: 1,
        });
        let params = RelinkParams {
            use_order_prior: false,
            ..RelinkParams::default()
        };
        // query is much closer to entry B
        let got = q.match_start(150, &emb(&[0.05, 0.98]), &params).unwrap();
        assert_eq!(got.local_id, 2);
        assert_eq!(q.entries().len(), 1);
        assert_eq!(q.entries()[0].local_id, 1);
    }

    #[test]
    fn queue_pop_then_empty() {
        let mut q = ZoneQueue::new(0);
        q.push(QueueEntry {
            local_id: 1,
            last_frame: 100,
            feature: emb(&[1.0, 0.0]),
            group: 0,
        });
        let got = q.match_start(150, &emb(&[1.0, 0.0]), &RelinkParams::default());
        assert!(got.is_some());
        assert!(q.entries().is_empty());
    }

    #[test]
    fn queue_no_match_on_empty() {
        let mut q = ZoneQueue::new(0);
        assert!(q
            .match_start(150, &emb(&[1.0, 0.0]), &RelinkParams::default())
            .is_none());
    }

    /// Two vehicles queue as A, B and reappear as A', B'. The greedy
    /// sequential matching must agree with the exhaustive minimum-cost
    /// assignment over the 2x2 feature distances.
    #[test]
    fn two_vehicle_queue_matches_assignment_oracle() {
        let fa = [1.0, 0.0, 0.1];
        let fb = [0.0, 1.0, 0.1];
        let fa2 = [0.95, 0.05, 0.12]; // noisy copies
        let fb2 = [0.04, 0.97, 0.08];
        let a = fragment(1, (0, 100), (10.0, 500.0), (480.0, 500.0), &fa);
        let b = fragment(2, (5, 110), (10.0, 520.0), (490.0, 520.0), &fb);
        let a2 = fragment(3, (150, 250), (510.0, 500.0), (990.0, 500.0), &fa2);
        let b2 = fragment(4, (160, 260), (520.0, 520.0), (990.0, 520.0), &fb2);
        let out = relink(
            &[a, b, a2, b2],
            &[ta_zone(0)],
            &RelinkParams::default(),
        )
        .unwrap();
        assert_eq!(out.tracklets.len(), 2);

        // brute-force 2x2 assignment oracle on the same distances
        let d = |x: &[f64], y: &[f64]| {
            feature_distance(&emb(x), &emb(y)).unwrap()
        };
        let straight = d(&fa, &fa2) + d(&fb, &fb2);
        let crossed = d(&fa, &fb2) + d(&fb, &fa2);
        assert!(straight < crossed);
        let pairs: Vec<(u32, u32)> = out
            .merges
            .iter()
            .map(|m| (m.from_local_id, m.to_local_id))
            .collect();
        assert_eq!(pairs, vec![(1, 3), (2, 4)]);
    }

    #[test]
    fn observation_conservation_and_idempotence() {
        let a = fragment(1, (0, 100), (10.0, 500.0), (500.0, 500.0), &[1.0, 0.0]);
        let b = fragment(2, (130, 200), (500.0, 500.0), (990.0, 500.0), &[1.0, 0.0]);
        let c = fragment(3, (20, 90), (10.0, 100.0), (990.0, 100.0), &[0.0, 1.0]);
        let input = vec![a, b, c];
        let zones = vec![ta_zone(0)];
        let params = RelinkParams::default();
        let once = relink(&input, &zones, &params).unwrap();

        let count_obs = |ts: &[Tracklet]| -> usize {
            ts.iter().map(|t| t.observations().len()).sum()
        };
        assert_eq!(count_obs(&once.tracklets), count_obs(&input));

        let twice = relink(&once.tracklets, &zones, &params).unwrap();
        assert_eq!(twice.tracklets, once.tracklets);
        assert!(twice.merges.is_empty());
    }
}
