//! Tracks CSV: one detection per row, grouped into per-camera
//! tracklets on read.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mtmct_core::geometry::BoundingBox;
use mtmct_core::track::{CameraId, FrameObservation, Tracklet};

use super::{fields, parse_field, FormatError};
use crate::formats::embeddings::EmbeddingFile;

pub const TRACKS_VERSION: &str = "# mtmct-tracks v1";
pub const TRACKS_HEADER: &str = "camera_id,frame,local_id,x,y,w,h,confidence";

pub fn write_tracks(path: &Path, tracklets: &[Tracklet]) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{TRACKS_VERSION}")?;
    writeln!(w, "{TRACKS_HEADER}")?;
    for t in tracklets {
        for o in t.observations() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},1.0",
                t.camera, o.frame, t.local_id, o.box_.x, o.box_.y, o.box_.w, o.box_.h
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parse a tracks file into per-camera tracklets. Rows may arrive in
/// any order; observations of one (camera, local_id) are sorted by
/// frame and must not repeat a frame.
pub fn read_tracks(path: &Path) -> Result<BTreeMap<CameraId, Vec<Tracklet>>, FormatError> {
    let file = path.display().to_string();
    let reader = BufReader::new(std::fs::File::open(path)?);

    let mut rows: BTreeMap<(u32, u32), Vec<FrameObservation>> = BTreeMap::new();
    let mut saw_version = false;
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if lineno == 1 && line != TRACKS_VERSION {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("unsupported version tag `{line}`"),
                ));
            }
            saw_version = true;
            continue;
        }
        if !saw_header {
            if line != TRACKS_HEADER {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("expected header `{TRACKS_HEADER}`"),
                ));
            }
            saw_header = true;
            continue;
        }
        let f = fields(&file, lineno, line, 8)?;
        let camera: u32 = parse_field(&file, lineno, "camera_id", f[0])?;
        let frame: u32 = parse_field(&file, lineno, "frame", f[1])?;
        let local_id: u32 = parse_field(&file, lineno, "local_id", f[2])?;
        let x: f64 = parse_field(&file, lineno, "x", f[3])?;
        let y: f64 = parse_field(&file, lineno, "y", f[4])?;
        let w: f64 = parse_field(&file, lineno, "w", f[5])?;
        let h: f64 = parse_field(&file, lineno, "h", f[6])?;
        let conf: f64 = parse_field(&file, lineno, "confidence", f[7])?;
        if !(w > 0.0 && h > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(FormatError::parse(&file, lineno, "invalid bounding box"));
        }
        if !(0.0..=1.0).contains(&conf) {
            return Err(FormatError::parse(&file, lineno, "confidence outside [0,1]"));
        }
        rows.entry((camera, local_id)).or_default().push(FrameObservation {
            frame,
            box_: BoundingBox::new(x, y, w, h),
            embedding: None,
        });
    }
    if !saw_version && saw_header {
        return Err(FormatError::invalid(&file, "missing version tag"));
    }

    let mut out: BTreeMap<CameraId, Vec<Tracklet>> = BTreeMap::new();
    for ((camera, local_id), mut obs) in rows {
        obs.sort_by_key(|o| o.frame);
        if let Some(w) = obs.windows(2).position(|w| w[0].frame == w[1].frame) {
            return Err(FormatError::invalid(
                &file,
                format!(
                    "camera {camera} track {local_id}: duplicate frame {}",
                    obs[w].frame
                ),
            ));
        }
        let t = Tracklet::new(CameraId(camera), local_id, obs)
            .map_err(|e| FormatError::invalid(&file, e))?;
        out.entry(t.camera).or_default().push(t);
    }
    for list in out.values_mut() {
        list.sort_by_key(|t| (t.first_frame(), t.local_id));
    }
    Ok(out)
}

/// Join per-frame embeddings onto tracklets by (camera, local_id,
/// frame). Frames without a stored embedding stay feature-less; a
/// tracklet with no record at all logs a warning.
pub fn attach_embeddings(tracklets: &mut BTreeMap<CameraId, Vec<Tracklet>>, emb: &EmbeddingFile) {
    let index = emb.frame_index();
    for list in tracklets.values_mut() {
        for t in list.iter_mut() {
            let camera = t.camera;
            let local_id = t.local_id;
            let mut hit = false;
            let obs: Vec<FrameObservation> = t
                .observations()
                .iter()
                .map(|o| {
                    let mut o = o.clone();
                    if let Some(v) = index.get(&(camera.0, local_id, o.frame)) {
                        o.embedding = Some(v.clone());
                        hit = true;
                    }
                    o
                })
                .collect();
            if !hit {
                log::warn!("camera {camera} track {local_id}: no embeddings found");
            }
            let mut rebuilt = Tracklet::new(camera, local_id, obs).expect("tracklet stays valid");
            rebuilt.feature = t.feature.clone();
            *t = rebuilt;
        }
    }
}

/// Flatten the per-camera map into one list sorted by (camera,
/// first_frame, local_id).
pub fn flatten(tracklets: &BTreeMap<CameraId, Vec<Tracklet>>) -> Vec<Tracklet> {
    let mut all: Vec<Tracklet> = tracklets.values().flatten().cloned().collect();
    all.sort_by_key(|t| (t.camera, t.first_frame(), t.local_id));
    all
}
