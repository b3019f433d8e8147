//! Trajectory-based camera link model.
//!
//! Each single-camera trajectory is classified to an entry-exit zone
//! pair by the mismatch distance `dist(P, V) = sum |1(z in P) - a_z|`
//! over the traversed zones. Camera links aggregate zone pairs of
//! adjacently connected cameras and carry a transition-time window
//! `(dt_min, dt_max)` with `dt = t_s - t_d`, the signed difference of
//! the frames at which a track first overlaps the two transition zones.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::overlap_ratio;
use crate::track::{CameraId, Tracklet};
use crate::zones::{Zone, ZoneKind};

/// An entry-exit zone pair describing one route through a camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ZonePair {
    pub camera: CameraId,
    pub entry_zone: u32,
    pub exit_zone: u32,
}

/// One zone crossed by a trajectory: peak overlap ratio plus the first
/// frame with positive overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneTraversal {
    pub zone: u32,
    pub alpha: f64,
    pub first_frame: u32,
}

/// Directed link between two cameras with its transition-time window.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraLink {
    pub source_camera: CameraId,
    pub dest_camera: CameraId,
    pub source_pairs: Vec<ZonePair>,
    pub dest_pairs: Vec<ZonePair>,
    /// Exit zone shared by every source pair.
    pub transition_zone_src: u32,
    /// Entry zone shared by every destination pair.
    pub transition_zone_dst: u32,
    /// Inclusive signed window on `dt = t_s - t_d`, in frames.
    pub window: (i64, i64),
    pub sample_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClmError {
    /// Source (or destination) zone pairs of one link disagree on the
    /// transition zone.
    InconsistentTransitionZone {
        source: CameraId,
        dest: CameraId,
    },
}

impl fmt::Display for ClmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClmError::InconsistentTransitionZone { source, dest } => write!(
                f,
                "link {source}->{dest}: member zone pairs disagree on the transition zone"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ClmError {}

/// Zones crossed by the trajectory, ordered by first contact.
///
/// `a_z` is the maximum per-frame overlap ratio over the trajectory's
/// life; zones with peak ratio at or below `min_alpha` are dropped.
pub fn trajectory_traversals(t: &Tracklet, zones: &[Zone], min_alpha: f64) -> Vec<ZoneTraversal> {
    let mut out = Vec::new();
    for zone in zones {
        if zone.camera != t.camera {
            continue;
        }
        let mut alpha = 0.0f64;
        let mut first_frame = None;
        for obs in t.observations() {
            let r = overlap_ratio(&obs.box_, &zone.rect);
            if r > 0.0 && first_frame.is_none() {
                first_frame = Some(obs.frame);
            }
            if r > alpha {
                alpha = r;
            }
        }
        if let Some(first_frame) = first_frame {
            if alpha > min_alpha {
                out.push(ZoneTraversal {
                    zone: zone.id,
                    alpha,
                    first_frame,
                });
            }
        }
    }
    out.sort_by(|a, b| (a.first_frame, a.zone).cmp(&(b.first_frame, b.zone)));
    out
}

/// Mismatch distance between a zone pair and the traversed zones.
///
/// Infinity when the traversal order contradicts entry-before-exit.
pub fn zone_pair_distance(pair: &ZonePair, traversals: &[ZoneTraversal]) -> f64 {
    let entry = traversals.iter().find(|t| t.zone == pair.entry_zone);
    let exit = traversals.iter().find(|t| t.zone == pair.exit_zone);
    if let (Some(e), Some(x)) = (entry, exit) {
        if x.first_frame < e.first_frame {
            return f64::INFINITY;
        }
    }
    let mut dist = 0.0;
    dist += (1.0 - entry.map(|t| t.alpha).unwrap_or(0.0)).abs();
    dist += (1.0 - exit.map(|t| t.alpha).unwrap_or(0.0)).abs();
    for t in traversals {
        if t.zone != pair.entry_zone && t.zone != pair.exit_zone {
            dist += t.alpha;
        }
    }
    dist
}

/// Assign the zone pair with minimum mismatch distance; `None` when
/// every candidate is at infinite distance (or there are none).
pub fn classify_traversals(pairs: &[ZonePair], traversals: &[ZoneTraversal]) -> Option<ZonePair> {
    let mut best: Option<(ZonePair, f64)> = None;
    for pair in pairs {
        let d = zone_pair_distance(pair, traversals);
        if !d.is_finite() {
            continue;
        }
        match best {
            None => best = Some((*pair, d)),
            Some((_, bd)) if d < bd => best = Some((*pair, d)),
            _ => {}
        }
    }
    best.map(|(p, _)| p)
}

pub fn classify_trajectory(
    t: &Tracklet,
    pairs: &[ZonePair],
    zones: &[Zone],
    min_alpha: f64,
) -> Option<ZonePair> {
    let traversals = trajectory_traversals(t, zones, min_alpha);
    let camera_pairs: Vec<ZonePair> = pairs.iter().filter(|p| p.camera == t.camera).copied().collect();
    classify_traversals(&camera_pairs, &traversals)
}

/// Candidate zone pairs per camera: every entry x exit combination,
/// pruned to the pairs at least one training trajectory classifies to.
pub fn observed_zone_pairs(zones: &[Zone], tracklets: &[Tracklet], min_alpha: f64) -> Vec<ZonePair> {
    let mut candidates = Vec::new();
    for entry in zones.iter().filter(|z| z.kind == ZoneKind::Entry) {
        for exit in zones.iter().filter(|z| z.kind == ZoneKind::Exit) {
            if entry.camera == exit.camera && entry.id != exit.id {
                candidates.push(ZonePair {
                    camera: entry.camera,
                    entry_zone: entry.id,
                    exit_zone: exit.id,
                });
            }
        }
    }
    candidates.sort();
    let mut seen = alloc::vec![false; candidates.len()];
    for t in tracklets {
        if let Some(pair) = classify_trajectory(t, &candidates, zones, min_alpha) {
            if let Ok(i) = candidates.binary_search(&pair) {
                seen[i] = true;
            }
        }
    }
    candidates
        .into_iter()
        .zip(seen)
        .filter_map(|(p, s)| s.then_some(p))
        .collect()
}

/// Everything the link model needs to know about one tracklet.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackletZoneProfile {
    pub camera: CameraId,
    pub local_id: u32,
    pub first_frame: u32,
    pub last_frame: u32,
    pub pair: Option<ZonePair>,
    /// Zone id -> first frame with positive overlap.
    pub first_overlap: BTreeMap<u32, u32>,
}

pub fn profile_tracklet(
    t: &Tracklet,
    zones: &[Zone],
    pairs: &[ZonePair],
    min_alpha: f64,
) -> TrackletZoneProfile {
    let all = trajectory_traversals(t, zones, 0.0);
    let first_overlap = all.iter().map(|tr| (tr.zone, tr.first_frame)).collect();
    let filtered: Vec<ZoneTraversal> = all.into_iter().filter(|tr| tr.alpha > min_alpha).collect();
    let camera_pairs: Vec<ZonePair> = pairs.iter().filter(|p| p.camera == t.camera).copied().collect();
    let pair = classify_traversals(&camera_pairs, &filtered);
    TrackletZoneProfile {
        camera: t.camera,
        local_id: t.local_id,
        first_frame: t.first_frame(),
        last_frame: t.last_frame(),
        pair,
        first_overlap,
    }
}

/// Window padding rule: a fraction of the observed span with a floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPad {
    pub frac: f64,
    pub min_frames: i64,
}

impl Default for WindowPad {
    fn default() -> Self {
        Self {
            frac: 0.2,
            min_frames: 10,
        }
    }
}

/// Build directed camera links from ground-truth-identified training
/// tracks. `tracks` holds, per identity, the zone profiles of its
/// single-camera trajectories.
pub fn build_links(
    tracks: &[(u32, Vec<TrackletZoneProfile>)],
    pad: &WindowPad,
) -> Result<Vec<CameraLink>, ClmError> {
    // raw per-direction samples: (src profile, dst profile)
    let mut by_link: BTreeMap<(CameraId, CameraId), Vec<(ZonePair, ZonePair, TrackletZoneProfile, TrackletZoneProfile)>> =
        BTreeMap::new();
    for (_gid, profiles) in tracks {
        let mut visits: Vec<&TrackletZoneProfile> = profiles.iter().collect();
        visits.sort_by_key(|p| (p.first_frame, p.camera, p.local_id));
        for w in visits.windows(2) {
            let (src, dst) = (w[0], w[1]);
            if src.camera == dst.camera {
                continue;
            }
            let (Some(sp), Some(dp)) = (src.pair, dst.pair) else {
                continue;
            };
            by_link
                .entry((src.camera, dst.camera))
                .or_default()
                .push((sp, dp, src.clone(), dst.clone()));
        }
    }

    let mut links = Vec::new();
    for ((source, dest), samples) in by_link {
        let mut source_pairs: Vec<ZonePair> = samples.iter().map(|s| s.0).collect();
        source_pairs.sort();
        source_pairs.dedup();
        let mut dest_pairs: Vec<ZonePair> = samples.iter().map(|s| s.1).collect();
        dest_pairs.sort();
        dest_pairs.dedup();

        let z_s = source_pairs[0].exit_zone;
        if source_pairs.iter().any(|p| p.exit_zone != z_s) {
            return Err(ClmError::InconsistentTransitionZone { source, dest });
        }
        let z_d = dest_pairs[0].entry_zone;
        if dest_pairs.iter().any(|p| p.entry_zone != z_d) {
            return Err(ClmError::InconsistentTransitionZone { source, dest });
        }

        let mut dts: Vec<i64> = Vec::new();
        for (_, _, src, dst) in &samples {
            let (Some(&ts), Some(&td)) = (src.first_overlap.get(&z_s), dst.first_overlap.get(&z_d))
            else {
                continue; // trajectory classified to the pair but never touched the zone
            };
            dts.push(ts as i64 - td as i64);
        }
        if dts.is_empty() {
            continue;
        }
        let lo = *dts.iter().min().unwrap();
        let hi = *dts.iter().max().unwrap();
        let span = hi - lo;
        let pad_frames = pad.min_frames.max((pad.frac * span as f64) as i64);
        links.push(CameraLink {
            source_camera: source,
            dest_camera: dest,
            source_pairs,
            dest_pairs,
            transition_zone_src: z_s,
            transition_zone_dst: z_d,
            window: (lo - pad_frames, hi + pad_frames),
            sample_count: dts.len() as u32,
        });
    }
    Ok(links)
}

/// Signed transition time of a candidate pair under this link, if both
/// tracklets touch their transition zones.
pub fn transition_time(
    link: &CameraLink,
    src: &TrackletZoneProfile,
    dst: &TrackletZoneProfile,
) -> Option<i64> {
    let ts = *src.first_overlap.get(&link.transition_zone_src)?;
    let td = *dst.first_overlap.get(&link.transition_zone_dst)?;
    Some(ts as i64 - td as i64)
}

/// True when the pair's zone pairs belong to the link and its
/// transition time falls inside the (inclusive) window.
pub fn candidate_filter(
    link: &CameraLink,
    src: &TrackletZoneProfile,
    dst: &TrackletZoneProfile,
) -> bool {
    if src.camera != link.source_camera || dst.camera != link.dest_camera {
        return false;
    }
    let (Some(sp), Some(dp)) = (src.pair, dst.pair) else {
        return false;
    };
    if !link.source_pairs.contains(&sp) || !link.dest_pairs.contains(&dp) {
        return false;
    }
    match transition_time(link, src, dst) {
        Some(dt) => link.window.0 <= dt && dt <= link.window.1,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, Rect};
    use crate::track::FrameObservation;
    use alloc::vec;

    fn zone(camera: u32, id: u32, x0: f64, kind: ZoneKind) -> Zone {
        Zone {
            id,
            camera: CameraId(camera),
            rect: Rect::new(x0, 0.0, x0 + 100.0, 100.0),
            n_entry: 1,
            n_exit: 1,
            kind,
        }
    }

    fn tracklet(camera: u32, id: u32, path: &[(u32, f64, f64)]) -> Tracklet {
        let obs = path
            .iter()
            .map(|&(frame, cx, cy)| FrameObservation {
                frame,
                box_: BoundingBox::new(cx - 10.0, cy - 10.0, 20.0, 20.0),
                embedding: None,
            })
            .collect();
        Tracklet::new(CameraId(camera), id, obs).unwrap()
    }

    #[test]
    fn traversals_empty_when_no_overlap() {
        let zones = vec![zone(1, 0, 0.0, ZoneKind::Entry)];
        let t = tracklet(1, 1, &[(0, 500.0, 500.0), (10, 600.0, 500.0)]);
        assert!(trajectory_traversals(&t, &zones, 0.0).is_empty());
    }

    #[test]
    fn traversal_fully_inside_single_zone() {
        let zones = vec![zone(1, 0, 0.0, ZoneKind::Entry)];
        let t = tracklet(1, 1, &[(0, 50.0, 50.0), (10, 60.0, 50.0)]);
        let v = trajectory_traversals(&t, &zones, 0.0);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].alpha, 1.0);
        assert_eq!(v[0].first_frame, 0);
    }

    #[test]
    fn traversal_order_and_peaks() {
        let zones = vec![
            zone(1, 1, 0.0, ZoneKind::Entry),
            zone(1, 2, 200.0, ZoneKind::Exit),
        ];
        // fully inside zone 1 at frame 0, grazes zone 2 at frame 20
        let t = tracklet(1, 1, &[(0, 50.0, 50.0), (10, 150.0, 50.0), (20, 196.0, 50.0)]);
        let v = trajectory_traversals(&t, &zones, 0.0);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].zone, 1);
        assert_eq!(v[0].alpha, 1.0);
        assert_eq!(v[1].zone, 2);
        assert!((v[1].alpha - 0.3).abs() < 1e-12, "{}", v[1].alpha);
    }

    fn pair(camera: u32, entry: u32, exit: u32) -> ZonePair {
        ZonePair {
            camera: CameraId(camera),
            entry_zone: entry,
            exit_zone: exit,
        }
    }

    fn tr(zone: u32, alpha: f64, first_frame: u32) -> ZoneTraversal {
        ZoneTraversal {
            zone,
            alpha,
            first_frame,
        }
    }

    #[test]
    fn distance_perfect_match_is_zero() {
        let p = pair(1, 1, 2);
        let v = vec![tr(1, 1.0, 0), tr(2, 1.0, 10)];
        assert_eq!(zone_pair_distance(&p, &v), 0.0);
    }

    #[test]
    fn distance_counts_spurious_neighbor() {
        let p = pair(1, 1, 2);
        let v = vec![tr(1, 1.0, 0), tr(3, 0.3, 5), tr(2, 1.0, 10)];
        assert!((zone_pair_distance(&p, &v) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn distance_infinite_on_order_conflict() {
        let p = pair(1, 1, 2);
        let v = vec![tr(2, 1.0, 0), tr(1, 1.0, 10)]; // exit seen before entry
        assert_eq!(zone_pair_distance(&p, &v), f64::INFINITY);
    }

    #[test]
    fn classify_single_finite_pair() {
        let pairs = vec![pair(1, 1, 2)];
        let v = vec![tr(1, 0.8, 0), tr(2, 0.9, 10)];
        assert_eq!(classify_traversals(&pairs, &v), Some(pairs[0]));
    }

    #[test]
    fn classify_picks_smaller_distance() {
        // zone pairs A=(1,2) and B=(3,4); the trajectory hugs A's zones
        let pairs = vec![pair(1, 1, 2), pair(1, 3, 4)];
        let v = vec![tr(1, 1.0, 0), tr(4, 0.3, 5), tr(2, 0.9, 9)];
        // dist A = 0 + 0.1 + 0.3 = 0.4; dist B = 1 + 0.7 + 1.0 + 0.9 = 3.6
        assert!((zone_pair_distance(&pairs[0], &v) - 0.4).abs() < 1e-12);
        assert!((zone_pair_distance(&pairs[1], &v) - 3.6).abs() < 1e-12);
        assert_eq!(classify_traversals(&pairs, &v), Some(pairs[0]));
    }

    #[test]
    fn classify_none_when_all_infinite() {
        let pairs = vec![pair(1, 1, 2)];
        let v = vec![tr(2, 1.0, 0), tr(1, 1.0, 10)];
        assert_eq!(classify_traversals(&pairs, &v), None);
    }

    fn profile(
        camera: u32,
        local_id: u32,
        first_frame: u32,
        pair_: Option<ZonePair>,
        overlaps: &[(u32, u32)],
    ) -> TrackletZoneProfile {
        TrackletZoneProfile {
            camera: CameraId(camera),
            local_id,
            first_frame,
            last_frame: first_frame + 100,
            pair: pair_,
            first_overlap: overlaps.iter().copied().collect(),
        }
    }

    #[test]
    fn single_sample_link_window() {
        // overlapping FoV: the source exit is seen after the dest entry
        let sp = pair(1, 10, 11);
        let dp = pair(2, 20, 21);
        let tracks = vec![(
            7u32,
            vec![
                profile(1, 1, 0, Some(sp), &[(10, 0), (11, 500)]),
                profile(2, 1, 450, Some(dp), &[(20, 450), (21, 900)]),
            ],
        )];
        let links = build_links(&tracks, &WindowPad::default()).unwrap();
        assert_eq!(links.len(), 1);
        let link = &links[0];
        assert_eq!(link.transition_zone_src, 11);
        assert_eq!(link.transition_zone_dst, 20);
        assert_eq!(link.window, (40, 60)); // dt = 500 - 450 = 50, pad floor 10
        assert_eq!(link.sample_count, 1);
    }

    #[test]
    fn intermediate_camera_breaks_link() {
        let p1 = pair(1, 10, 11);
        let p2 = pair(2, 20, 21);
        let p3 = pair(3, 30, 31);
        let tracks = vec![(
            7u32,
            vec![
                profile(1, 1, 0, Some(p1), &[(11, 100)]),
                profile(2, 1, 200, Some(p2), &[(20, 200), (21, 300)]),
                profile(3, 1, 400, Some(p3), &[(30, 400)]),
            ],
        )];
        let links = build_links(&tracks, &WindowPad::default()).unwrap();
        let cams: Vec<(CameraId, CameraId)> = links
            .iter()
            .map(|l| (l.source_camera, l.dest_camera))
            .collect();
        assert!(cams.contains(&(CameraId(1), CameraId(2))));
        assert!(cams.contains(&(CameraId(2), CameraId(3))));
        assert!(!cams.contains(&(CameraId(1), CameraId(3))));
    }

    #[test]
    fn two_sample_window_min_max_pad() {
        let sp = pair(1, 10, 11);
        let dp = pair(2, 20, 21);
        let mk = |gid: u32, ts: u32, td: u32| {
            (
                gid,
                vec![
                    profile(1, gid, 0, Some(sp), &[(11, ts)]),
                    profile(2, gid, td, Some(dp), &[(20, td)]),
                ],
            )
        };
        // dt samples: 30 and 70
        let tracks = vec![mk(1, 130, 100), mk(2, 270, 200)];
        let links = build_links(&tracks, &WindowPad::default()).unwrap();
        assert_eq!(links[0].window, (20, 80));
        assert_eq!(links[0].sample_count, 2);
    }

    #[test]
    fn inconsistent_exit_zone_is_error() {
        let dp = pair(2, 20, 21);
        let tracks = vec![
            (
                1u32,
                vec![
                    profile(1, 1, 0, Some(pair(1, 10, 11)), &[(11, 100)]),
                    profile(2, 1, 150, Some(dp), &[(20, 150)]),
                ],
            ),
            (
                2u32,
                vec![
                    profile(1, 2, 0, Some(pair(1, 10, 12)), &[(12, 100)]),
                    profile(2, 2, 150, Some(dp), &[(20, 150)]),
                ],
            ),
        ];
        assert!(matches!(
            build_links(&tracks, &WindowPad::default()),
            Err(ClmError::InconsistentTransitionZone { .. })
        ));
    }

    fn simple_link() -> CameraLink {
        CameraLink {
            source_camera: CameraId(1),
            dest_camera: CameraId(2),
            source_pairs: vec![pair(1, 10, 11)],
            dest_pairs: vec![pair(2, 20, 21)],
            transition_zone_src: 11,
            transition_zone_dst: 20,
            window: (40, 60),
            sample_count: 3,
        }
    }

    #[test]
    fn filter_boundary_inclusive() {
        let link = simple_link();
        let src = profile(1, 1, 0, Some(pair(1, 10, 11)), &[(11, 500)]);
        let dst = profile(2, 1, 460, Some(pair(2, 20, 21)), &[(20, 460)]);
        assert!(candidate_filter(&link, &src, &dst)); // dt = 40 = window lo
        let dst_late = profile(2, 1, 439, Some(pair(2, 20, 21)), &[(20, 439)]);
        assert!(!candidate_filter(&link, &src, &dst_late)); // dt = 61
    }

    #[test]
    fn filter_rejects_wrong_pair() {
        let link = simple_link();
        let src = profile(1, 1, 0, Some(pair(1, 10, 12)), &[(11, 500), (12, 510)]);
        let dst = profile(2, 1, 450, Some(pair(2, 20, 21)), &[(20, 450)]);
        assert!(!candidate_filter(&link, &src, &dst));
    }

    #[test]
    fn filter_rejects_missing_zone_contact() {
        let link = simple_link();
        let src = profile(1, 1, 0, Some(pair(1, 10, 11)), &[(10, 0)]);
        let dst = profile(2, 1, 450, Some(pair(2, 20, 21)), &[(20, 450)]);
        assert!(!candidate_filter(&link, &src, &dst));
    }
}
