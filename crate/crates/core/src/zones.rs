//! Zone discovery per camera: cluster trajectory endpoints with
//! MeanShift, bound each cluster with a rectangle, and classify the
//! zones from their entry/exit count densities.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Rect;
use crate::track::{CameraId, Tracklet};

/// Whether an endpoint node came from the first or the last observation
/// of its tracklet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
}

/// Trajectory endpoint used as clustering input.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneNode {
    pub position: (f64, f64),
    pub kind: NodeKind,
    pub source: (CameraId, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneKind {
    Entry,
    Exit,
    TrafficAware,
    Unclassified,
}

impl fmt::Display for ZoneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ZoneKind::Entry => "entry",
            ZoneKind::Exit => "exit",
            ZoneKind::TrafficAware => "traffic_aware",
            ZoneKind::Unclassified => "unclassified",
        };
        f.write_str(s)
    }
}

/// One discovered zone of a camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: u32,
    pub camera: CameraId,
    pub rect: Rect,
    pub n_entry: u32,
    pub n_exit: u32,
    pub kind: ZoneKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanShiftParams {
    /// Flat-kernel radius in pixels.
    pub bandwidth: f64,
    pub convergence_tol: f64,
    pub max_iters: u32,
    /// Converged modes closer than this are merged into one cluster.
    pub merge_radius: f64,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        Self {
            bandwidth: 80.0,
            convergence_tol: 0.5,
            max_iters: 200,
            merge_radius: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneError {
    NoPoints,
    NonFinitePoint { at: usize },
    ZeroCounts,
    AssignmentMismatch,
}

impl fmt::Display for ZoneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZoneError::NoPoints => write!(f, "mean shift needs at least one point"),
            ZoneError::NonFinitePoint { at } => write!(f, "non-finite point at index {at}"),
            ZoneError::ZeroCounts => write!(f, "zone has no entry or exit counts"),
            ZoneError::AssignmentMismatch => write!(f, "assignment does not cover all nodes"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ZoneError {}

/// Two endpoint nodes per tracklet: entry from the first observation's
/// box center, exit from the last.
pub fn extract_zone_nodes(tracklets: &[Tracklet]) -> Vec<ZoneNode> {
    let mut nodes = Vec::with_capacity(tracklets.len() * 2);
    for t in tracklets {
        nodes.push(ZoneNode {
            position: t.first().box_.center(),
            kind: NodeKind::Entry,
            source: (t.camera, t.local_id),
        });
        nodes.push(ZoneNode {
            position: t.last().box_.center(),
            kind: NodeKind::Exit,
            source: (t.camera, t.local_id),
        });
    }
    nodes
}

/// Result of clustering: per-point cluster index plus the cluster modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub modes: Vec<(f64, f64)>,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.modes.len()
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// MeanShift mode seeking with a flat kernel.
///
/// Every point converges to a local mode; modes within `merge_radius`
/// of each other (transitively) form one cluster. Cluster labels are
/// assigned by first occurrence in input order, so the partition is
/// independent of input permutation even though labels are not.
pub fn mean_shift(
    points: &[(f64, f64)],
    params: &MeanShiftParams,
) -> Result<ClusterAssignment, ZoneError> {
    if points.is_empty() {
        return Err(ZoneError::NoPoints);
    }
    for (i, p) in points.iter().enumerate() {
        if !p.0.is_finite() || !p.1.is_finite() {
            return Err(ZoneError::NonFinitePoint { at: i });
        }
    }
    let bw2 = params.bandwidth * params.bandwidth;
    let tol2 = params.convergence_tol * params.convergence_tol;

    let mut modes: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &start in points {
        let mut x = start;
        for _ in 0..params.max_iters {
            let mut sx = 0.0;
            let mut sy = 0.0;
            let mut n = 0usize;
            for &p in points {
                if dist2(x, p) <= bw2 {
                    sx += p.0;
                    sy += p.1;
                    n += 1;
                }
            }
            // the point itself is always within the kernel, so n >= 1
            let next = (sx / n as f64, sy / n as f64);
            let moved = dist2(x, next);
            x = next;
            if moved < tol2 {
                break;
            }
        }
        modes.push(x);
    }

    // Transitive closure over mode pairs within merge_radius; using the
    // full pairwise relation keeps the partition permutation-invariant.
    let mr2 = params.merge_radius * params.merge_radius;
    let mut parent: Vec<usize> = (0..modes.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        if parent[i] != i {
            parent[i] = find(parent, parent[i]);
        }
        parent[i]
    }
    for i in 0..modes.len() {
        for j in (i + 1)..modes.len() {
            if dist2(modes[i], modes[j]) <= mr2 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }

    let mut labels = Vec::with_capacity(points.len());
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..modes.len() {
        let r = find(&mut parent, i);
        let label = match roots.iter().position(|&x| x == r) {
            Some(idx) => idx,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
        labels.push(label);
    }

    // Cluster mode = centroid of its members' converged modes.
    let k = roots.len();
    let mut cx = alloc::vec![0.0; k];
    let mut cy = alloc::vec![0.0; k];
    let mut cn = alloc::vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        cx[l] += modes[i].0;
        cy[l] += modes[i].1;
        cn[l] += 1;
    }
    let cluster_modes = (0..k)
        .map(|l| (cx[l] / cn[l] as f64, cy[l] / cn[l] as f64))
        .collect();

    Ok(ClusterAssignment {
        labels,
        modes: cluster_modes,
    })
}

/// One zone per cluster: bounding rectangle of member positions plus
/// entry/exit counts. Kinds start out unclassified.
pub fn build_zones(
    camera: CameraId,
    nodes: &[ZoneNode],
    assignment: &ClusterAssignment,
) -> Result<Vec<Zone>, ZoneError> {
    if assignment.labels.len() != nodes.len() {
        return Err(ZoneError::AssignmentMismatch);
    }
    let k = assignment.n_clusters();
    let mut zones: Vec<Option<Zone>> = alloc::vec![None; k];
    for (node, &label) in nodes.iter().zip(&assignment.labels) {
        let (x, y) = node.position;
        let zone = zones[label].get_or_insert_with(|| Zone {
            id: label as u32,
            camera,
            rect: Rect::point(x, y),
            n_entry: 0,
            n_exit: 0,
            kind: ZoneKind::Unclassified,
        });
        zone.rect.expand(x, y);
        match node.kind {
            NodeKind::Entry => zone.n_entry += 1,
            NodeKind::Exit => zone.n_exit += 1,
        }
    }
    Ok(zones.into_iter().flatten().collect())
}

/// Entry, exit, and traffic-aware densities of a zone:
/// `D_e = N_e / (N_e + N_x)`, `D_x = N_x / (N_e + N_x)`,
/// `D_ta = 1 - |N_e - N_x| / (N_e + N_x)`.
pub fn densities(zone: &Zone) -> Result<(f64, f64, f64), ZoneError> {
    let total = zone.n_entry + zone.n_exit;
    if total == 0 {
        return Err(ZoneError::ZeroCounts);
    }
    let total = total as f64;
    let ne = zone.n_entry as f64;
    let nx = zone.n_exit as f64;
    let d_e = ne / total;
    let d_x = nx / total;
    let d_ta = 1.0 - (ne - nx).abs() / total;
    Ok((d_e, d_x, d_ta))
}

/// Density thresholds for zone classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneThresholds {
    pub rho_ta: f64,
    pub rho_e: f64,
    pub rho_x: f64,
}

impl Default for ZoneThresholds {
    fn default() -> Self {
        Self {
            rho_ta: 0.5,
            rho_e: 0.7,
            rho_x: 0.7,
        }
    }
}

/// Classify by fixed precedence: traffic-aware, then entry, then exit.
pub fn classify_zone(zone: &Zone, thresholds: &ZoneThresholds) -> Result<ZoneKind, ZoneError> {
    let (d_e, d_x, d_ta) = densities(zone)?;
    Ok(if d_ta >= thresholds.rho_ta {
        ZoneKind::TrafficAware
    } else if d_e >= thresholds.rho_e {
        ZoneKind::Entry
    } else if d_x >= thresholds.rho_x {
        ZoneKind::Exit
    } else {
        ZoneKind::Unclassified
    })
}

/// End-to-end zone discovery for one camera's tracklets.
pub fn discover_zones(
    camera: CameraId,
    tracklets: &[Tracklet],
    params: &MeanShiftParams,
    thresholds: &ZoneThresholds,
) -> Result<Vec<Zone>, ZoneError> {
    let nodes = extract_zone_nodes(tracklets);
    if nodes.is_empty() {
        return Ok(Vec::new());
    }
    let points: Vec<(f64, f64)> = nodes.iter().map(|n| n.position).collect();
    let assignment = mean_shift(&points, params)?;
    let mut zones = build_zones(camera, &nodes, &assignment)?;
    for zone in zones.iter_mut() {
        zone.kind = classify_zone(zone, thresholds)?;
    }
    Ok(zones)
}
