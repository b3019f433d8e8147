//! Cross-camera identity association: camera-link-constrained candidate
//! generation, greedy hierarchical clustering with transitivity via
//! union-find, a cross-camera order constraint, and an exact
//! correlation-clustering oracle (enumeration over set partitions) for
//! small instances.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::clm::{candidate_filter, CameraLink, TrackletZoneProfile};
use crate::embedding::{feature_distance, EmbeddingVector};
use crate::track::GlobalTrack;

/// Symmetric distance matrix; infinity marks invalid pairs and the
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![f64::INFINITY; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn finite_pair_count(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j).is_finite() {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Which camera link admitted a pair, and its transition frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairLink {
    pub link_index: usize,
    pub source: usize,
    pub dest: usize,
    pub t_source: i64,
    pub t_dest: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationConstraints {
    /// Distance threshold for merging.
    pub delta: f64,
    pub iterations: u32,
    pub enforce_order: bool,
}

impl Default for AssociationConstraints {
    fn default() -> Self {
        Self {
            delta: 0.5,
            iterations: 2,
            enforce_order: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssocError {
    TooManyNodes { n: usize, max: usize },
}

impl fmt::Display for AssocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssocError::TooManyNodes { n, max } => {
                write!(f, "exact solver limited to {max} nodes, got {n}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AssocError {}

/// Trajectory-feature distances over camera-link-admissible pairs.
///
/// Same-camera pairs are always infinite. With `use_clm_filter` off,
/// every cross-camera pair with features present is finite.
pub fn build_distance_matrix(
    features: &[Option<EmbeddingVector>],
    profiles: &[TrackletZoneProfile],
    links: &[CameraLink],
    use_clm_filter: bool,
) -> (DistanceMatrix, BTreeMap<(usize, usize), PairLink>) {
    debug_assert_eq!(features.len(), profiles.len());
    let n = profiles.len();
    let mut matrix = DistanceMatrix::new(n);
    let mut meta = BTreeMap::new();

    for i in 0..n {
        for j in (i + 1)..n {
            if profiles[i].camera == profiles[j].camera {
                continue;
            }
            let (Some(fi), Some(fj)) = (&features[i], &features[j]) else {
                continue;
            };
            if use_clm_filter {
                let mut admitted = None;
                'links: for (li, link) in links.iter().enumerate() {
                    for (s, d) in [(i, j), (j, i)] {
                        if candidate_filter(link, &profiles[s], &profiles[d]) {
                            let dt_parts = (
                                profiles[s].first_overlap[&link.transition_zone_src] as i64,
                                profiles[d].first_overlap[&link.transition_zone_dst] as i64,
                            );
                            admitted = Some(PairLink {
                                link_index: li,
                                source: s,
                                dest: d,
                                t_source: dt_parts.0,
                                t_dest: dt_parts.1,
                            });
                            break 'links;
                        }
                    }
                }
                let Some(pl) = admitted else { continue };
                meta.insert((i, j), pl);
            }
            if let Ok(d) = feature_distance(fi, fj) {
                matrix.set(i, j, d);
            }
        }
    }
    (matrix, meta)
}

/// Accepted transition pairs per camera link, for the order constraint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkOrderState {
    /// link index -> (t_source, t_dest) of accepted pairs.
    accepted: BTreeMap<usize, Vec<(i64, i64)>>,
}

impl LinkOrderState {
    pub fn new() -> Self {
        Self::default()
    }

    /// True when inserting the pair keeps destination times monotone
    /// non-decreasing in source times on this link. Equal source times
    /// never conflict.
    pub fn check(&self, link_index: usize, t_source: i64, t_dest: i64) -> bool {
        match self.accepted.get(&link_index) {
            None => true,
            Some(pairs) => pairs.iter().all(|&(s, d)| {
                if s < t_source {
                    d <= t_dest
                } else if s > t_source {
                    d >= t_dest
                } else {
                    true
                }
            }),
        }
    }

    pub fn insert(&mut self, link_index: usize, t_source: i64, t_dest: i64) {
        self.accepted
            .entry(link_index)
            .or_default()
            .push((t_source, t_dest));
    }
}

/// Standalone order-constraint check for one candidate pair.
pub fn order_check(state: &LinkOrderState, link_index: usize, t_source: i64, t_dest: i64) -> bool {
    state.check(link_index, t_source, t_dest)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            self.parent[i] = self.find(self.parent[i]);
        }
        self.parent[i]
    }

    fn union(&mut self, i: usize, j: usize) {
        let (ri, rj) = (self.find(i), self.find(j));
        if ri != rj {
            self.parent[ri.max(rj)] = ri.min(rj);
        }
    }
}

/// Greedy hierarchical clustering over the distance matrix.
///
/// Pairs are processed in ascending distance; a pair merges its two
/// clusters when the distance is under delta, the merge keeps at most
/// one temporally overlapping tracklet per camera, and (optionally)
/// the pair respects the per-link order constraint. Rejected pairs are
/// dropped for good. Global ids are assigned in order of each
/// cluster's smallest tracklet index.
pub fn hierarchical_cluster(
    matrix: &DistanceMatrix,
    meta: &BTreeMap<(usize, usize), PairLink>,
    profiles: &[TrackletZoneProfile],
    constraints: &AssociationConstraints,
) -> Vec<GlobalTrack> {
    let n = matrix.len();
    debug_assert_eq!(profiles.len(), n);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = matrix.get(i, j);
            if d.is_finite() {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut uf = UnionFind::new(n);
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| alloc::vec![i]).collect();
    let mut order_state = LinkOrderState::new();
    let mut dead = alloc::vec![false; pairs.len()];

    for _ in 0..constraints.iterations {
        for (idx, &(d, i, j)) in pairs.iter().enumerate() {
            if dead[idx] {
                continue;
            }
            if d >= constraints.delta {
                dead[idx] = true;
                continue;
            }
            let (ri, rj) = (uf.find(i), uf.find(j));
            if ri == rj {
                continue;
            }
            // physical impossibility: two overlapping tracklets of one
            // camera cannot be the same vehicle
            let conflict = members[ri].iter().any(|&a| {
                members[rj].iter().any(|&b| {
                    profiles[a].camera == profiles[b].camera
                        && profiles[a].first_frame <= profiles[b].last_frame
                        && profiles[b].first_frame <= profiles[a].last_frame
                })
            });
            if conflict {
                dead[idx] = true;
                continue;
            }
            if constraints.enforce_order {
                if let Some(pl) = meta.get(&(i, j)) {
                    if !order_state.check(pl.link_index, pl.t_source, pl.t_dest) {
                        dead[idx] = true;
                        continue;
                    }
                    order_state.insert(pl.link_index, pl.t_source, pl.t_dest);
                }
            }
            uf.union(ri, rj);
            let root = uf.find(ri);
            let other = if root == ri { rj } else { ri };
            let moved = core::mem::take(&mut members[other]);
            members[root].extend(moved);
            dead[idx] = true; // merged; never revisit
        }
    }

    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        clusters.entry(uf.find(i)).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = clusters.into_values().collect();
    groups.sort_by_key(|g| *g.iter().min().unwrap());
    groups
        .into_iter()
        .enumerate()
        .map(|(gid, group)| {
            let members: BTreeSet<_> = group
                .into_iter()
                .map(|i| (profiles[i].camera, profiles[i].local_id))
                .collect();
            GlobalTrack::new(gid as u32 + 1, members)
        })
        .collect()
}

pub const BIP_MAX_NODES: usize = 12;

/// Exact correlation clustering by enumeration over all set partitions
/// (transitivity holds by construction). Maximizes the sum of weights
/// of within-cluster pairs. Limited to [`BIP_MAX_NODES`] nodes.
pub fn bip_solve_exact(weights: &[Vec<f64>]) -> Result<(Vec<usize>, f64), AssocError> {
    let n = weights.len();
    if n > BIP_MAX_NODES {
        return Err(AssocError::TooManyNodes {
            n,
            max: BIP_MAX_NODES,
        });
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }

    let mut labels = alloc::vec![0usize; n];
    let mut best_labels = alloc::vec![0usize; n];
    let mut best = f64::NEG_INFINITY;

    // restricted-growth enumeration with incremental objective
    fn recurse(
        i: usize,
        max_label: usize,
        objective: f64,
        weights: &[Vec<f64>],
        labels: &mut [usize],
        best: &mut f64,
        best_labels: &mut [usize],
    ) {
        let n = weights.len();
        if i == n {
            if objective > *best {
                *best = objective;
                best_labels.copy_from_slice(labels);
            }
            return;
        }
        for label in 0..=max_label {
            let gain: f64 = (0..i)
                .filter(|&j| labels[j] == label)
                .map(|j| weights[j][i])
                .sum();
            labels[i] = label;
            let next_max = if label == max_label { max_label + 1 } else { max_label };
            recurse(
                i + 1,
                next_max,
                objective + gain,
                weights,
                labels,
                best,
                best_labels,
            );
        }
    }
    recurse(0, 0, 0.0, weights, &mut labels, &mut best, &mut best_labels);
    Ok((best_labels, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clm::ZonePair;
    use crate::track::CameraId;
    use alloc::vec;

    fn emb(v: &[f64]) -> Option<EmbeddingVector> {
        Some(EmbeddingVector::new(v.to_vec()).unwrap())
    }

    fn profile(camera: u32, local_id: u32, frames: (u32, u32)) -> TrackletZoneProfile {
        TrackletZoneProfile {
            camera: CameraId(camera),
            local_id,
            first_frame: frames.0,
            last_frame: frames.1,
            pair: None,
            first_overlap: BTreeMap::new(),
        }
    }

    #[test]
    fn matrix_unfiltered_cross_camera_only() {
        let features = vec![emb(&[0.0, 0.0]), emb(&[3.0, 4.0]), emb(&[1.0, 1.0])];
        let profiles = vec![
            profile(1, 1, (0, 10)),
            profile(2, 1, (20, 30)),
            profile(1, 2, (40, 50)),
        ];
        let (m, meta) = build_distance_matrix(&features, &profiles, &[], false);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(0, 2), f64::INFINITY); // same camera
        assert!(m.get(1, 2).is_finite());
        assert!(meta.is_empty());
        assert_eq!(m.finite_pair_count(), 2);
    }

    fn link_with_window(window: (i64, i64)) -> CameraLink {
        let sp = ZonePair {
            camera: CameraId(1),
            entry_zone: 10,
            exit_zone: 11,
        };
        let dp = ZonePair {
            camera: CameraId(2),
            entry_zone: 20,
            exit_zone: 21,
        };
        CameraLink {
            source_camera: CameraId(1),
            dest_camera: CameraId(2),
            source_pairs: vec![sp],
            dest_pairs: vec![dp],
            transition_zone_src: 11,
            transition_zone_dst: 20,
            window,
            sample_count: 1,
        }
    }

    fn linked_profile(camera: u32, local_id: u32, zone: u32, t: u32) -> TrackletZoneProfile {
        let pair = if camera == 1 {
            ZonePair {
                camera: CameraId(1),
                entry_zone: 10,
                exit_zone: 11,
            }
        } else {
            ZonePair {
                camera: CameraId(2),
                entry_zone: 20,
                exit_zone: 21,
            }
        };
        TrackletZoneProfile {
            camera: CameraId(camera),
            local_id,
            first_frame: t,
            last_frame: t + 50,
            pair: Some(pair),
            first_overlap: [(zone, t)].into_iter().collect(),
        }
    }

    #[test]
    fn matrix_filtered_by_window() {
        let features = vec![emb(&[1.0, 0.0]), emb(&[1.0, 0.1]), emb(&[1.0, 0.2])];
        let links = vec![link_with_window((-120, -80))];
        // src exits at 100; valid dest enters at 200 (dt = -100),
        // invalid dest enters at 400 (dt = -300)
        let profiles = vec![
            linked_profile(1, 1, 11, 100),
            linked_profile(2, 1, 20, 200),
            linked_profile(2, 2, 20, 400),
        ];
        let (m, meta) = build_distance_matrix(&features, &profiles, &links, true);
        assert!(m.get(0, 1).is_finite());
        assert_eq!(m.get(0, 2), f64::INFINITY);
        assert_eq!(meta[&(0, 1)].t_source, 100);
        assert_eq!(meta[&(0, 1)].t_dest, 200);
        assert_eq!(m.finite_pair_count(), 1);
    }

    #[test]
    fn cluster_two_close_tracklets() {
        let profiles = vec![profile(1, 1, (0, 10)), profile(2, 5, (20, 30))];
        let mut m = DistanceMatrix::new(2);
        m.set(0, 1, 0.1);
        let tracks =
            hierarchical_cluster(&m, &BTreeMap::new(), &profiles, &AssociationConstraints::default());
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].members.len(), 2);
    }

    #[test]
    fn cluster_all_far_stays_singletons() {
        let profiles = vec![profile(1, 1, (0, 10)), profile(2, 5, (20, 30))];
        let mut m = DistanceMatrix::new(2);
        m.set(0, 1, 0.9);
        let c = AssociationConstraints {
            delta: 0.5,
            ..Default::default()
        };
        let tracks = hierarchical_cluster(&m, &BTreeMap::new(), &profiles, &c);
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn cluster_rejects_same_camera_time_overlap() {
        // 0 and 2 share camera 1 and overlap in time; linking both to 1
        // must be refused for the worse pair
        let profiles = vec![
            profile(1, 1, (0, 100)),
            profile(2, 1, (50, 150)),
            profile(1, 2, (40, 90)),
        ];
        let mut m = DistanceMatrix::new(3);
        m.set(0, 1, 0.1);
        m.set(1, 2, 0.2);
        let tracks =
            hierarchical_cluster(&m, &BTreeMap::new(), &profiles, &AssociationConstraints::default());
        assert_eq!(tracks.len(), 2);
        assert!(tracks[0].members.contains(&(CameraId(1), 1)));
        assert!(tracks[0].members.contains(&(CameraId(2), 1)));
        assert_eq!(tracks[1].members.len(), 1);
    }

    #[test]
    fn cluster_separated_matches_bip() {
        // 6 tracklets, 3 identities, intra < delta/2, inter > 2*delta
        let delta = 0.5;
        let profiles: Vec<_> = (0..6)
            .map(|i| profile(1 + (i % 2) as u32, i as u32, (i as u32 * 10, i as u32 * 10 + 5)))
            .collect();
        let mut m = DistanceMatrix::new(6);
        let mut w = vec![vec![0.0; 6]; 6];
        let id_of = |i: usize| i / 2;
        for i in 0..6 {
            for j in (i + 1)..6 {
                if profiles[i].camera == profiles[j].camera {
                    continue;
                }
                let d = if id_of(i) == id_of(j) { 0.2 } else { 1.5 };
                m.set(i, j, d);
                w[i][j] = delta - d;
                w[j][i] = delta - d;
            }
        }
        let tracks =
            hierarchical_cluster(&m, &BTreeMap::new(), &profiles, &AssociationConstraints::default());
        let (labels, _) = bip_solve_exact(&w).unwrap();
        // compare partitions over indices
        let mut greedy: Vec<BTreeSet<usize>> = tracks
            .iter()
            .map(|t| {
                (0..6)
                    .filter(|&i| t.members.contains(&(profiles[i].camera, profiles[i].local_id)))
                    .collect()
            })
            .collect();
        greedy.sort();
        let mut exact: Vec<BTreeSet<usize>> = {
            let k = labels.iter().max().unwrap() + 1;
            (0..k)
                .map(|l| (0..6).filter(|&i| labels[i] == l).collect())
                .collect()
        };
        exact.sort();
        assert_eq!(greedy, exact);
    }

    #[test]
    fn bip_all_negative_singletons() {
        let w = vec![
            vec![0.0, -1.0, -2.0],
            vec![-1.0, 0.0, -3.0],
            vec![-2.0, -3.0, 0.0],
        ];
        let (labels, obj) = bip_solve_exact(&w).unwrap();
        assert_eq!(labels, vec![0, 1, 2]);
        assert_eq!(obj, 0.0);
    }

    #[test]
    fn bip_all_positive_single_cluster() {
        let w = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ];
        let (labels, obj) = bip_solve_exact(&w).unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
        assert_eq!(obj, 6.0);
    }

    #[test]
    fn bip_transitivity_tradeoff() {
        // merging all three wins despite one negative edge
        let w = vec![
            vec![0.0, 5.0, -1.0],
            vec![5.0, 0.0, 5.0],
            vec![-1.0, 5.0, 0.0],
        ];
        let (labels, obj) = bip_solve_exact(&w).unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
        assert_eq!(obj, 9.0);
    }

    #[test]
    fn bip_rejects_large_instances() {
        let w = vec![vec![0.0; 13]; 13];
        assert!(matches!(
            bip_solve_exact(&w),
            Err(AssocError::TooManyNodes { n: 13, .. })
        ));
    }

    #[test]
    fn order_check_cases() {
        let mut state = LinkOrderState::new();
        assert!(order_check(&state, 0, 100, 200));
        state.insert(0, 100, 200);
        assert!(!order_check(&state, 0, 150, 180)); // overtaking
        assert!(order_check(&state, 0, 150, 260));
        assert!(order_check(&state, 0, 100, 500)); // equal source frames
        assert!(order_check(&state, 1, 150, 180)); // different link
    }
}
