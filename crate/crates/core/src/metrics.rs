//! Identity-based evaluation (IDF1/IDP/IDR via the globally optimal
//! truth-to-computed identity matching) and CLEAR-style single-camera
//! measures (MOTA/MOTP/Recall/MT).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::geometry::{iou, BoundingBox};
use crate::track::CameraId;

pub mod assignment;

/// One per-frame annotation or prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBox {
    pub camera: CameraId,
    pub frame: u32,
    pub id: u64,
    pub box_: BoundingBox,
}

/// Identity-measure report.
#[derive(Debug, Clone, PartialEq)]
pub struct IdReport {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub idp: f64,
    pub idr: f64,
    pub idf1: f64,
}

type FrameKey = (CameraId, u32);
type IdentityTrack = BTreeMap<FrameKey, BoundingBox>;

fn group_by_identity(boxes: &[EvalBox]) -> BTreeMap<u64, IdentityTrack> {
    let mut out: BTreeMap<u64, IdentityTrack> = BTreeMap::new();
    for b in boxes {
        out.entry(b.id).or_default().insert((b.camera, b.frame), b.box_);
    }
    out
}

/// Frames where both identities carry a box that matches at IOU >= delta.
fn matched_frames(a: &IdentityTrack, b: &IdentityTrack, delta: f64) -> u64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .filter(|(key, box_a)| {
            large
                .get(key)
                .map(|box_b| iou(box_a, box_b) >= delta)
                .unwrap_or(false)
        })
        .count() as u64
}

const FORBIDDEN: f64 = 1e15;

/// Identity precision, recall, and F1 at IOU threshold `delta`.
///
/// The truth-to-computed identity matching minimizes IDFP + IDFN as a
/// rectangular assignment problem augmented with unmatched slots.
pub fn id_measures(gt: &[EvalBox], pred: &[EvalBox], delta: f64) -> IdReport {
    let gt_tracks = group_by_identity(gt);
    let pred_tracks = group_by_identity(pred);
    if gt_tracks.is_empty() && pred_tracks.is_empty() {
        return IdReport {
            idtp: 0,
            idfp: 0,
            idfn: 0,
            idp: 1.0,
            idr: 1.0,
            idf1: 1.0,
        };
    }

    let taus: Vec<&IdentityTrack> = gt_tracks.values().collect();
    let gammas: Vec<&IdentityTrack> = pred_tracks.values().collect();
    let nt = taus.len();
    let ng = gammas.len();
    let n = nt + ng;

    let gt_total: u64 = taus.iter().map(|t| t.len() as u64).sum();
    let pred_total: u64 = gammas.iter().map(|t| t.len() as u64).sum();

    // cost(tau, gamma) = len(tau) + len(gamma) - 2 * matches; the
    // bottom/right blocks model leaving an identity unmatched
    let mut cost = alloc::vec![alloc::vec![0.0f64; n]; n];
    let mut matches = alloc::vec![alloc::vec![0u64; nt]; ng.max(1)];
    for (i, tau) in taus.iter().enumerate() {
        for (j, gamma) in gammas.iter().enumerate() {
            let m = matched_frames(tau, gamma, delta);
            matches[j][i] = m;
            cost[i][j] = (tau.len() + gamma.len()) as f64 - 2.0 * m as f64;
        }
        for j in 0..nt {
            cost[i][ng + j] = if i == j { taus[i].len() as f64 } else { FORBIDDEN };
        }
    }
    for i in 0..ng {
        for j in 0..ng {
            cost[nt + i][j] = if i == j {
                gammas[i].len() as f64
            } else {
                FORBIDDEN
            };
        }
        // dummy-to-dummy at zero cost
    }

    let row_to_col = assignment::solve(&cost);
    let mut idtp = 0u64;
    for (i, &j) in row_to_col.iter().enumerate().take(nt) {
        if j < ng {
            idtp += matches[j][i];
        }
    }
    let idfn = gt_total - idtp;
    let idfp = pred_total - idtp;

    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    IdReport {
        idtp,
        idfp,
        idfn,
        idp: ratio(idtp, idtp + idfp),
        idr: ratio(idtp, idtp + idfn),
        idf1: ratio(2 * idtp, 2 * idtp + idfp + idfn),
    }
}

/// CLEAR-MOT style report.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearReport {
    pub mota: f64,
    pub motp: f64,
    pub recall: f64,
    /// Ground-truth tracks matched on at least 80% of their frames.
    pub mostly_tracked: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub id_switches: u64,
    pub gt_count: u64,
}

/// Frame-wise matching at IOU >= delta with identity persistence:
/// existing correspondences are kept while they still overlap, then
/// the remaining boxes pair greedily by descending IOU.
pub fn clear_mot(gt: &[EvalBox], pred: &[EvalBox], delta: f64) -> ClearReport {
    // (camera, frame) -> id -> box
    let mut gt_frames: BTreeMap<FrameKey, BTreeMap<u64, BoundingBox>> = BTreeMap::new();
    for b in gt {
        gt_frames.entry((b.camera, b.frame)).or_default().insert(b.id, b.box_);
    }
    let mut pred_frames: BTreeMap<FrameKey, BTreeMap<u64, BoundingBox>> = BTreeMap::new();
    for b in pred {
        pred_frames.entry((b.camera, b.frame)).or_default().insert(b.id, b.box_);
    }

    let all_keys: BTreeSet<FrameKey> = gt_frames.keys().chain(pred_frames.keys()).copied().collect();

    let mut last_match: BTreeMap<(CameraId, u64), u64> = BTreeMap::new();
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    let mut idsw = 0u64;
    let mut iou_sum = 0.0f64;
    // per (camera, gt id): (present frames, matched frames)
    let mut coverage: BTreeMap<(CameraId, u64), (u64, u64)> = BTreeMap::new();

    let empty = BTreeMap::new();
    for key in all_keys {
        let (camera, _) = key;
        let g = gt_frames.get(&key).unwrap_or(&empty);
        let p = pred_frames.get(&key).unwrap_or(&empty);
        for &gid in g.keys() {
            coverage.entry((camera, gid)).or_insert((0, 0)).0 += 1;
        }

        let mut unmatched_gt: BTreeSet<u64> = g.keys().copied().collect();
        let mut unmatched_pred: BTreeSet<u64> = p.keys().copied().collect();
        let mut frame_matches: Vec<(u64, u64, f64)> = Vec::new();

        // keep prior correspondences that still hold
        for (&gid, gbox) in g {
            if let Some(&pid) = last_match.get(&(camera, gid)) {
                if let Some(pbox) = p.get(&pid) {
                    if unmatched_pred.contains(&pid) {
                        let v = iou(gbox, pbox);
                        if v >= delta {
                            frame_matches.push((gid, pid, v));
                            unmatched_gt.remove(&gid);
                            unmatched_pred.remove(&pid);
                        }
                    }
                }
            }
        }

        // greedy by descending IOU on what remains
        let mut candidates: Vec<(f64, u64, u64)> = Vec::new();
        for &gid in &unmatched_gt {
            for &pid in &unmatched_pred {
                let v = iou(&g[&gid], &p[&pid]);
                if v >= delta {
                    candidates.push((v, gid, pid));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
        for (v, gid, pid) in candidates {
            if unmatched_gt.contains(&gid) && unmatched_pred.contains(&pid) {
                frame_matches.push((gid, pid, v));
                unmatched_gt.remove(&gid);
                unmatched_pred.remove(&pid);
            }
        }

        for (gid, pid, v) in frame_matches {
            if let Some(&prev) = last_match.get(&(camera, gid)) {
                if prev != pid {
                    idsw += 1;
                }
            }
            last_match.insert((camera, gid), pid);
            tp += 1;
            iou_sum += v;
            coverage.get_mut(&(camera, gid)).unwrap().1 += 1;
        }
        fn_ += unmatched_gt.len() as u64;
        fp += unmatched_pred.len() as u64;
    }

    let gt_count = gt.len() as u64;
    let mostly_tracked = coverage
        .values()
        .filter(|(present, matched)| *present > 0 && (*matched as f64) / (*present as f64) >= 0.8)
        .count() as u64;

    if gt_count == 0 && pred.is_empty() {
        return ClearReport {
            mota: 1.0,
            motp: 1.0,
            recall: 1.0,
            mostly_tracked: 0,
            true_positives: 0,
            false_positives: 0,
            false_negatives: 0,
            id_switches: 0,
            gt_count: 0,
        };
    }

    ClearReport {
        mota: if gt_count == 0 {
            0.0
        } else {
            1.0 - (fn_ + fp + idsw) as f64 / gt_count as f64
        },
        motp: if tp == 0 { 0.0 } else { iou_sum / tp as f64 },
        recall: if gt_count == 0 {
            0.0
        } else {
            tp as f64 / gt_count as f64
        },
        mostly_tracked,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        id_switches: idsw,
        gt_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eb(camera: u32, frame: u32, id: u64, x: f64) -> EvalBox {
        EvalBox {
            camera: CameraId(camera),
            frame,
            id,
            box_: BoundingBox::new(x, 0.0, 10.0, 10.0),
        }
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let gt: Vec<EvalBox> = (0..10).map(|f| eb(1, f, 1, f as f64 * 20.0)).collect();
        let r = id_measures(&gt, &gt, 0.5);
        assert_eq!((r.idf1, r.idp, r.idr), (1.0, 1.0, 1.0));
        assert_eq!(r.idfp + r.idfn, 0);
    }

    #[test]
    fn split_track_half_idf1() {
        let gt: Vec<EvalBox> = (0..10).map(|f| eb(1, f, 1, f as f64 * 20.0)).collect();
        let pred: Vec<EvalBox> = (0..10)
            .map(|f| eb(1, f, if f < 5 { 10 } else { 11 }, f as f64 * 20.0))
            .collect();
        let r = id_measures(&gt, &pred, 0.5);
        assert_eq!(r.idtp, 5);
        assert_eq!(r.idfn, 5);
        assert_eq!(r.idfp, 5);
        assert_eq!(r.idf1, 0.5);
    }

    #[test]
    fn empty_prediction_zero_idf1() {
        let gt: Vec<EvalBox> = (0..10).map(|f| eb(1, f, 1, 0.0)).collect();
        let r = id_measures(&gt, &[], 0.5);
        assert_eq!(r.idtp, 0);
        assert_eq!(r.idf1, 0.0);
    }

    #[test]
    fn both_empty_is_vacuously_perfect() {
        let r = id_measures(&[], &[], 0.5);
        assert_eq!((r.idf1, r.idp, r.idr), (1.0, 1.0, 1.0));
    }

    #[test]
    fn idtp_identity_holds_both_sides() {
        let gt: Vec<EvalBox> = (0..10)
            .map(|f| eb(1, f, 1, f as f64 * 20.0))
            .chain((0..6).map(|f| eb(1, f, 2, 500.0)))
            .collect();
        let pred: Vec<EvalBox> = (0..8).map(|f| eb(1, f, 7, f as f64 * 20.0)).collect();
        let r = id_measures(&gt, &pred, 0.5);
        let gt_total = 16u64;
        let pred_total = 8u64;
        assert_eq!(gt_total - r.idfn, r.idtp);
        assert_eq!(pred_total - r.idfp, r.idtp);
    }

    #[test]
    fn clear_perfect() {
        let gt: Vec<EvalBox> = (0..10).map(|f| eb(1, f, 1, f as f64 * 20.0)).collect();
        let r = clear_mot(&gt, &gt, 0.5);
        assert_eq!(r.mota, 1.0);
        assert_eq!(r.motp, 1.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.mostly_tracked, 1);
    }

    #[test]
    fn clear_missing_everything() {
        let gt: Vec<EvalBox> = (0..10).map(|f| eb(1, f, 1, 0.0)).collect();
        let r = clear_mot(&gt, &[], 0.5);
        assert_eq!(r.mota, 0.0);
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.mostly_tracked, 0);
        assert_eq!(r.false_positives, 0);
    }

    #[test]
    fn clear_identity_switch_accounting() {
        // 10 GT frames; predictions on 9 of them, id changes at frame 5
        let gt: Vec<EvalBox> = (0..10).map(|f| eb(1, f, 1, f as f64 * 20.0)).collect();
        let pred: Vec<EvalBox> = (0..10)
            .filter(|&f| f != 9)
            .map(|f| eb(1, f, if f < 5 { 100 } else { 101 }, f as f64 * 20.0))
            .collect();
        let r = clear_mot(&gt, &pred, 0.5);
        assert_eq!(r.false_negatives, 1);
        assert_eq!(r.id_switches, 1);
        assert!((r.mota - 0.8).abs() < 1e-12);
    }

    /// Brute-force oracle: enumerate all injective identity matchings
    /// and minimize IDFP + IDFN.
    fn oracle(gt: &[EvalBox], pred: &[EvalBox], delta: f64) -> (u64, u64, u64) {
        let gt_tracks = group_by_identity(gt);
        let pred_tracks = group_by_identity(pred);
        let taus: Vec<&IdentityTrack> = gt_tracks.values().collect();
        let gammas: Vec<&IdentityTrack> = pred_tracks.values().collect();
        let gt_total: u64 = taus.iter().map(|t| t.len() as u64).sum();
        let pred_total: u64 = gammas.iter().map(|t| t.len() as u64).sum();

        fn recurse(
            i: usize,
            used: &mut Vec<bool>,
            taus: &[&IdentityTrack],
            gammas: &[&IdentityTrack],
            delta: f64,
        ) -> u64 {
            if i == taus.len() {
                return 0;
            }
            // leave tau_i unmatched
            let mut best = recurse(i + 1, used, taus, gammas, delta);
            for j in 0..gammas.len() {
                if used[j] {
                    continue;
                }
                used[j] = true;
                let m = matched_frames(taus[i], gammas[j], delta);
                best = best.max(m + recurse(i + 1, used, taus, gammas, delta));
                used[j] = false;
            }
            best
        }
        let mut used = alloc::vec![false; gammas.len()];
        let idtp = recurse(0, &mut used, &taus, &gammas, delta);
        (idtp, pred_total - idtp, gt_total - idtp)
    }

    #[test]
    fn matches_bruteforce_on_small_scene() {
        let gt: Vec<EvalBox> = (0..10)
            .map(|f| eb(1, f, 1, f as f64 * 20.0))
            .chain((0..8).map(|f| eb(1, f, 2, 500.0 + f as f64)))
            .chain((3..9).map(|f| eb(2, f, 3, 100.0)))
            .collect();
        let pred: Vec<EvalBox> = (0..6)
            .map(|f| eb(1, f, 20, f as f64 * 20.0))
            .chain((6..10).map(|f| eb(1, f, 21, f as f64 * 20.0)))
            .chain((0..8).map(|f| eb(1, f, 22, 501.0 + f as f64)))
            .chain((3..7).map(|f| eb(2, f, 23, 101.0)))
            .collect();
        let r = id_measures(&gt, &pred, 0.5);
        let (idtp, idfp, idfn) = oracle(&gt, &pred, 0.5);
        assert_eq!((r.idtp, r.idfp, r.idfn), (idtp, idfp, idfn));
    }
}
