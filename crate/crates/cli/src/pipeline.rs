//! Pipeline orchestration: zone discovery, in-camera re-linking,
//! camera link model construction, and cross-camera association.

use std::collections::BTreeMap;

use mtmct_core::assoc::{build_distance_matrix, hierarchical_cluster};
use mtmct_core::clm::{build_links, observed_zone_pairs, profile_tracklet, ClmError};
use mtmct_core::metrics::EvalBox;
use mtmct_core::reid::tracklet_feature;
use mtmct_core::track::{CameraId, GlobalTrack, Tracklet};
use mtmct_core::tsct::{relink, MergeRecord, RelinkError};
use mtmct_core::zones::{discover_zones, Zone, ZoneError};
use mtmct_core::EmbeddingVector;

use crate::config::PipelineConfig;
use crate::formats::clm::ClmFile;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("zone discovery: {0}")]
    Zones(#[from] ZoneError),
    #[error("re-linking: {0}")]
    Relink(#[from] RelinkError),
    #[error("camera link model: {0}")]
    Clm(#[from] ClmError),
}

/// Discover one camera's zones and grow each rect by half the kernel
/// bandwidth: cluster members sit within that radius of the mode, so
/// the point cloud's bounding box understates the region (it is a
/// single point for a perfectly repeated endpoint).
pub fn discover_camera_zones(
    camera: CameraId,
    tracklets: &[Tracklet],
    cfg: &PipelineConfig,
) -> Result<Vec<Zone>, ZoneError> {
    let mut zones = discover_zones(
        camera,
        tracklets,
        &cfg.mean_shift_params(),
        &cfg.zone_thresholds(),
    )?;
    let r = cfg.zones_bandwidth / 2.0;
    for z in zones.iter_mut() {
        z.rect.expand(z.rect.x_min - r, z.rect.y_min - r);
        z.rect.expand(z.rect.x_max + r, z.rect.y_max + r);
    }
    Ok(zones)
}

/// Zones for every camera, concatenated. Zone ids are unique per
/// camera.
pub fn discover_all_zones(
    tracklets: &BTreeMap<CameraId, Vec<Tracklet>>,
    cfg: &PipelineConfig,
) -> Result<Vec<Zone>, ZoneError> {
    let mut zones = Vec::new();
    for (&camera, list) in tracklets {
        zones.extend(discover_camera_zones(camera, list, cfg)?);
    }
    Ok(zones)
}

/// Re-link fragmented tracks in every camera through its discovered
/// traffic-aware zones.
pub fn run_tsct(
    tracklets: &BTreeMap<CameraId, Vec<Tracklet>>,
    cfg: &PipelineConfig,
) -> Result<(BTreeMap<CameraId, Vec<Tracklet>>, Vec<MergeRecord>), PipelineError> {
    let params = cfg.relink_params();
    let mut out = BTreeMap::new();
    let mut merges = Vec::new();
    for (&camera, list) in tracklets {
        let zones = discover_camera_zones(camera, list, cfg)?;
        let outcome = relink(list, &zones, &params)?;
        log::info!(
            "camera {camera}: {} tracklets -> {} after re-linking ({} merges)",
            list.len(),
            outcome.tracklets.len(),
            outcome.merges.len()
        );
        merges.extend(outcome.merges);
        out.insert(camera, outcome.tracklets);
    }
    Ok((out, merges))
}

/// Build the camera link model from identity-labeled training tracks:
/// discover zones, derive the observed zone-pair vocabulary, then
/// learn transition windows from each identity's consecutive camera
/// visits.
pub fn run_clm(
    tracklets: &BTreeMap<CameraId, Vec<Tracklet>>,
    labels: &BTreeMap<(u32, u32), u32>,
    cfg: &PipelineConfig,
) -> Result<(Vec<Zone>, ClmFile), PipelineError> {
    let zones = discover_all_zones(tracklets, cfg)?;
    let all: Vec<Tracklet> = tracklets.values().flatten().cloned().collect();
    let pairs = observed_zone_pairs(&zones, &all, cfg.clm_min_alpha);

    let mut by_identity: BTreeMap<u32, Vec<_>> = BTreeMap::new();
    for t in &all {
        let Some(&gid) = labels.get(&(t.camera.0, t.local_id)) else {
            log::warn!(
                "camera {} track {}: no identity label, skipped",
                t.camera,
                t.local_id
            );
            continue;
        };
        by_identity
            .entry(gid)
            .or_default()
            .push(profile_tracklet(t, &zones, &pairs, cfg.clm_min_alpha));
    }
    let mut tracks: Vec<(u32, Vec<_>)> = by_identity.into_iter().collect();
    for (_, visits) in tracks.iter_mut() {
        visits.sort_by_key(|p| p.first_frame);
    }

    let links = build_links(&tracks, &cfg.window_pad())?;
    log::info!(
        "camera link model: {} zone pairs, {} links",
        pairs.len(),
        links.len()
    );
    Ok((zones, ClmFile { pairs, links }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackOptions {
    pub use_tsct: bool,
    pub use_clm_filter: bool,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            use_tsct: true,
            use_clm_filter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    /// Final per-frame boxes carrying global identities.
    pub results: Vec<EvalBox>,
    pub globals: Vec<GlobalTrack>,
    /// Tracklets after re-linking, in association order.
    pub tracklets: Vec<Tracklet>,
    pub merges: Vec<MergeRecord>,
    /// Cross-camera pairs given a finite appearance distance.
    pub finite_pairs: usize,
}

/// Full pipeline over parsed tracks: re-link fragments per camera,
/// classify every tracklet against the model zones, associate across
/// cameras, and emit per-frame results with global ids.
pub fn run_track(
    tracklets: &BTreeMap<CameraId, Vec<Tracklet>>,
    model_zones: &[Zone],
    clm: &ClmFile,
    cfg: &PipelineConfig,
    opts: &TrackOptions,
) -> Result<TrackOutput, PipelineError> {
    let (linked, merges) = if opts.use_tsct {
        run_tsct(tracklets, cfg)?
    } else {
        (tracklets.clone(), Vec::new())
    };

    let flat: Vec<Tracklet> = linked.values().flatten().cloned().collect();
    let features: Vec<Option<EmbeddingVector>> = flat
        .iter()
        .map(|t| tracklet_feature(t, cfg.reid_clip_length).ok())
        .collect();
    let profiles: Vec<_> = flat
        .iter()
        .map(|t| profile_tracklet(t, model_zones, &clm.pairs, cfg.clm_min_alpha))
        .collect();

    let (matrix, meta) =
        build_distance_matrix(&features, &profiles, &clm.links, opts.use_clm_filter);
    let finite_pairs = matrix.finite_pair_count();
    log::info!(
        "association: {} tracklets, {} candidate pairs",
        flat.len(),
        finite_pairs
    );

    let globals = hierarchical_cluster(&matrix, &meta, &profiles, &cfg.association_constraints());

    let mut id_of: BTreeMap<(CameraId, u32), u32> = BTreeMap::new();
    for g in &globals {
        for &m in &g.members {
            id_of.insert(m, g.global_id);
        }
    }
    let mut results = Vec::new();
    for t in &flat {
        let gid = id_of[&(t.camera, t.local_id)];
        for o in t.observations() {
            results.push(EvalBox {
                camera: t.camera,
                frame: o.frame,
                id: gid as u64,
                box_: o.box_,
            });
        }
    }
    Ok(TrackOutput {
        results,
        globals,
        tracklets: flat,
        merges,
        finite_pairs,
    })
}

/// Qualify identities per camera so evaluation scores single-camera
/// tracking: the same id in two cameras counts as two identities.
pub fn qualify_per_camera(boxes: &[EvalBox]) -> Vec<EvalBox> {
    boxes
        .iter()
        .map(|b| EvalBox {
            id: b.id * 1_000_000 + b.camera.0 as u64,
            ..b.clone()
        })
        .collect()
}
