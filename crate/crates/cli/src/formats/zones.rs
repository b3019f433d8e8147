//! Zones CSV: one zone per row with camera, rect, endpoint counts and
//! classification.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mtmct_core::geometry::Rect;
use mtmct_core::track::CameraId;
use mtmct_core::zones::{Zone, ZoneKind};

use super::{fields, parse_field, FormatError};

pub const ZONES_VERSION: &str = "# mtmct-zones v1";
pub const ZONES_HEADER: &str = "camera_id,zone_id,x_min,y_min,x_max,y_max,n_entry,n_exit,kind";

fn kind_str(kind: ZoneKind) -> &'static str {
    match kind {
        ZoneKind::Entry => "entry",
        ZoneKind::Exit => "exit",
        ZoneKind::TrafficAware => "traffic_aware",
        ZoneKind::Unclassified => "unclassified",
    }
}

fn kind_from(s: &str) -> Option<ZoneKind> {
    match s {
        "entry" => Some(ZoneKind::Entry),
        "exit" => Some(ZoneKind::Exit),
        "traffic_aware" => Some(ZoneKind::TrafficAware),
        "unclassified" => Some(ZoneKind::Unclassified),
        _ => None,
    }
}

pub fn write_zones(path: &Path, zones: &[Zone]) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{ZONES_VERSION}")?;
    writeln!(w, "{ZONES_HEADER}")?;
    for z in zones {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            z.camera,
            z.id,
            z.rect.x_min,
            z.rect.y_min,
            z.rect.x_max,
            z.rect.y_max,
            z.n_entry,
            z.n_exit,
            kind_str(z.kind)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_zones(path: &Path) -> Result<Vec<Zone>, FormatError> {
    let file = path.display().to_string();
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut zones = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if lineno == 1 && line != ZONES_VERSION {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("unsupported version tag `{line}`"),
                ));
            }
            continue;
        }
        if !saw_header {
            if line != ZONES_HEADER {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("expected header `{ZONES_HEADER}`"),
                ));
            }
            saw_header = true;
            continue;
        }
        let f = fields(&file, lineno, line, 9)?;
        let camera: u32 = parse_field(&file, lineno, "camera_id", f[0])?;
        let id: u32 = parse_field(&file, lineno, "zone_id", f[1])?;
        let x_min: f64 = parse_field(&file, lineno, "x_min", f[2])?;
        let y_min: f64 = parse_field(&file, lineno, "y_min", f[3])?;
        let x_max: f64 = parse_field(&file, lineno, "x_max", f[4])?;
        let y_max: f64 = parse_field(&file, lineno, "y_max", f[5])?;
        let n_entry: u32 = parse_field(&file, lineno, "n_entry", f[6])?;
        let n_exit: u32 = parse_field(&file, lineno, "n_exit", f[7])?;
        let kind = kind_from(f[8])
            .ok_or_else(|| FormatError::parse(&file, lineno, format!("unknown kind `{}`", f[8])))?;
        if !(x_min <= x_max && y_min <= y_max) {
            return Err(FormatError::parse(&file, lineno, "degenerate rect bounds"));
        }
        zones.push(Zone {
            id,
            camera: CameraId(camera),
            rect: Rect::new(x_min, y_min, x_max, y_max),
            n_entry,
            n_exit,
            kind,
        });
    }
    Ok(zones)
}
