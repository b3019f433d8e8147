//! Final results CSV (per-frame boxes with global identities) and the
//! identity labels CSV mapping camera-local track ids to global ids.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mtmct_core::geometry::BoundingBox;
use mtmct_core::metrics::EvalBox;
use mtmct_core::track::CameraId;

use super::{fields, parse_field, FormatError};

pub const RESULTS_VERSION: &str = "# mtmct-results v1";
pub const RESULTS_HEADER: &str = "camera_id,frame,global_id,x,y,w,h";

pub const LABELS_VERSION: &str = "# mtmct-labels v1";
pub const LABELS_HEADER: &str = "camera_id,local_id,global_id";

pub fn write_results(path: &Path, boxes: &[EvalBox]) -> Result<(), FormatError> {
    let mut sorted: Vec<&EvalBox> = boxes.iter().collect();
    sorted.sort_by(|a, b| {
        (a.camera, a.frame, a.id)
            .partial_cmp(&(b.camera, b.frame, b.id))
            .unwrap()
    });
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{RESULTS_VERSION}")?;
    writeln!(w, "{RESULTS_HEADER}")?;
    for b in sorted {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            b.camera, b.frame, b.id, b.box_.x, b.box_.y, b.box_.w, b.box_.h
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<EvalBox>, FormatError> {
    let file = path.display().to_string();
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if lineno == 1 && line != RESULTS_VERSION {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("unsupported version tag `{line}`"),
                ));
            }
            continue;
        }
        if !saw_header {
            if line != RESULTS_HEADER {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("expected header `{RESULTS_HEADER}`"),
                ));
            }
            saw_header = true;
            continue;
        }
        let f = fields(&file, lineno, line, 7)?;
        let camera: u32 = parse_field(&file, lineno, "camera_id", f[0])?;
        let frame: u32 = parse_field(&file, lineno, "frame", f[1])?;
        let id: u64 = parse_field(&file, lineno, "global_id", f[2])?;
        let x: f64 = parse_field(&file, lineno, "x", f[3])?;
        let y: f64 = parse_field(&file, lineno, "y", f[4])?;
        let w: f64 = parse_field(&file, lineno, "w", f[5])?;
        let h: f64 = parse_field(&file, lineno, "h", f[6])?;
        if !(w > 0.0 && h > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(FormatError::parse(&file, lineno, "invalid bounding box"));
        }
        out.push(EvalBox {
            camera: CameraId(camera),
            frame,
            id,
            box_: BoundingBox::new(x, y, w, h),
        });
    }
    Ok(out)
}

pub fn write_labels(
    path: &Path,
    labels: &BTreeMap<(u32, u32), u32>,
) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{LABELS_VERSION}")?;
    writeln!(w, "{LABELS_HEADER}")?;
    for (&(camera, local_id), &global_id) in labels {
        writeln!(w, "{camera},{local_id},{global_id}")?;
    }
    w.flush()?;
    Ok(())
}

/// (camera, local_id) -> global identity.
pub fn read_labels(path: &Path) -> Result<BTreeMap<(u32, u32), u32>, FormatError> {
    let file = path.display().to_string();
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = BTreeMap::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if lineno == 1 && line != LABELS_VERSION {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("unsupported version tag `{line}`"),
                ));
            }
            continue;
        }
        if !saw_header {
            if line != LABELS_HEADER {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("expected header `{LABELS_HEADER}`"),
                ));
            }
            saw_header = true;
            continue;
        }
        let f = fields(&file, lineno, line, 3)?;
        let camera: u32 = parse_field(&file, lineno, "camera_id", f[0])?;
        let local_id: u32 = parse_field(&file, lineno, "local_id", f[1])?;
        let global_id: u32 = parse_field(&file, lineno, "global_id", f[2])?;
        if out.insert((camera, local_id), global_id).is_some() {
            return Err(FormatError::parse(
                &file,
                lineno,
                format!("duplicate label for camera {camera} track {local_id}"),
            ));
        }
    }
    Ok(out)
}
