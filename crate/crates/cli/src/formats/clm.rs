//! Camera link model text format: the zone-pair vocabulary plus one
//! block per directed camera link with member pairs, transition zones,
//! time window and sample count.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mtmct_core::clm::{CameraLink, ZonePair};
use mtmct_core::track::CameraId;

use super::FormatError;

pub const CLM_VERSION: &str = "# mtmct-clm v1";

/// Serialized camera link model: per-camera zone-pair vocabulary and
/// the directed camera links.
#[derive(Debug, Clone, PartialEq)]
pub struct ClmFile {
    pub pairs: Vec<ZonePair>,
    pub links: Vec<CameraLink>,
}

fn write_pair(w: &mut impl Write, tag: &str, p: &ZonePair) -> std::io::Result<()> {
    writeln!(w, "{tag} {} {} {}", p.camera, p.entry_zone, p.exit_zone)
}

pub fn write_clm(path: &Path, clm: &ClmFile) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{CLM_VERSION}")?;
    for p in &clm.pairs {
        write_pair(&mut w, "pair", p)?;
    }
    for l in &clm.links {
        writeln!(w, "link {} {}", l.source_camera, l.dest_camera)?;
        writeln!(
            w,
            "  transition {} {}",
            l.transition_zone_src, l.transition_zone_dst
        )?;
        writeln!(w, "  window {} {}", l.window.0, l.window.1)?;
        writeln!(w, "  samples {}", l.sample_count)?;
        for p in &l.source_pairs {
            write_pair(&mut w, "  source_pair", p)?;
        }
        for p in &l.dest_pairs {
            write_pair(&mut w, "  dest_pair", p)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_pair(file: &str, lineno: usize, args: &[&str]) -> Result<ZonePair, FormatError> {
    if args.len() != 3 {
        return Err(FormatError::parse(file, lineno, "pair needs 3 fields"));
    }
    let parse = |name: &str, raw: &str| super::parse_field::<u32>(file, lineno, name, raw);
    Ok(ZonePair {
        camera: CameraId(parse("camera", args[0])?),
        entry_zone: parse("entry_zone", args[1])?,
        exit_zone: parse("exit_zone", args[2])?,
    })
}

pub fn read_clm(path: &Path) -> Result<ClmFile, FormatError> {
    let file = path.display().to_string();
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut pairs = Vec::new();
    let mut links: Vec<CameraLink> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if lineno == 1 && line != CLM_VERSION {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("unsupported version tag `{line}`"),
                ));
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let (keyword, args) = (tokens[0], &tokens[1..]);
        match keyword {
            "pair" => pairs.push(parse_pair(&file, lineno, args)?),
            "link" => {
                if args.len() != 2 {
                    return Err(FormatError::parse(&file, lineno, "link needs 2 fields"));
                }
                let src: u32 = super::parse_field(&file, lineno, "source camera", args[0])?;
                let dst: u32 = super::parse_field(&file, lineno, "dest camera", args[1])?;
                links.push(CameraLink {
                    source_camera: CameraId(src),
                    dest_camera: CameraId(dst),
                    source_pairs: Vec::new(),
                    dest_pairs: Vec::new(),
                    transition_zone_src: 0,
                    transition_zone_dst: 0,
                    window: (0, 0),
                    sample_count: 0,
                });
            }
            "transition" | "window" | "samples" | "source_pair" | "dest_pair" => {
                let link = links.last_mut().ok_or_else(|| {
                    FormatError::parse(&file, lineno, format!("`{keyword}` outside a link block"))
                })?;
                match keyword {
                    "transition" => {
                        if args.len() != 2 {
                            return Err(FormatError::parse(&file, lineno, "transition needs 2 fields"));
                        }
                        link.transition_zone_src =
                            super::parse_field(&file, lineno, "source zone", args[0])?;
                        link.transition_zone_dst =
                            super::parse_field(&file, lineno, "dest zone", args[1])?;
                    }
                    "window" => {
                        if args.len() != 2 {
                            return Err(FormatError::parse(&file, lineno, "window needs 2 fields"));
                        }
                        let lo: i64 = super::parse_field(&file, lineno, "window low", args[0])?;
                        let hi: i64 = super::parse_field(&file, lineno, "window high", args[1])?;
                        if lo > hi {
                            return Err(FormatError::parse(&file, lineno, "empty window"));
                        }
                        link.window = (lo, hi);
                    }
                    "samples" => {
                        if args.len() != 1 {
                            return Err(FormatError::parse(&file, lineno, "samples needs 1 field"));
                        }
                        link.sample_count = super::parse_field(&file, lineno, "samples", args[0])?;
                    }
                    "source_pair" => link.source_pairs.push(parse_pair(&file, lineno, args)?),
                    "dest_pair" => link.dest_pairs.push(parse_pair(&file, lineno, args)?),
                    _ => unreachable!(),
                }
            }
            other => {
                return Err(FormatError::parse(
                    &file,
                    lineno,
                    format!("unknown keyword `{other}`"),
                ))
            }
        }
    }
    Ok(ClmFile { pairs, links })
}
