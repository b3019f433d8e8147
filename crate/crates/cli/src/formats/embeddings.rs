//! Embeddings binary format: little-endian, magic bytes and version,
//! one record per (camera, local_id) listing frames and 32-bit float
//! feature rows.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use mtmct_core::EmbeddingVector;

use super::FormatError;

pub const MAGIC: &[u8; 4] = b"MTEB";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub camera: u32,
    pub local_id: u32,
    pub frames: Vec<u32>,
    /// frames.len() * dim values, row-major.
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub dim: u32,
    pub records: Vec<EmbeddingRecord>,
}

impl EmbeddingFile {
    pub fn new(dim: u32) -> Self {
        Self {
            dim,
            records: Vec::new(),
        }
    }

    /// (camera, local_id, frame) -> feature vector.
    pub fn frame_index(&self) -> BTreeMap<(u32, u32, u32), EmbeddingVector> {
        let dim = self.dim as usize;
        let mut out = BTreeMap::new();
        for r in &self.records {
            for (i, &frame) in r.frames.iter().enumerate() {
                let row = &r.values[i * dim..(i + 1) * dim];
                let v = EmbeddingVector::new(row.iter().map(|&x| x as f64).collect())
                    .expect("stored embeddings are finite and non-empty");
                out.insert((r.camera, r.local_id, frame), v);
            }
        }
        out
    }
}

pub fn write_embeddings(path: &Path, emb: &EmbeddingFile) -> Result<(), FormatError> {
    let file = path.display().to_string();
    for r in &emb.records {
        if r.values.len() != r.frames.len() * emb.dim as usize {
            return Err(FormatError::invalid(
                &file,
                format!(
                    "camera {} track {}: {} values for {} frames of dim {}",
                    r.camera,
                    r.local_id,
                    r.values.len(),
                    r.frames.len(),
                    emb.dim
                ),
            ));
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&emb.dim.to_le_bytes())?;
    w.write_all(&(emb.records.len() as u32).to_le_bytes())?;
    for r in &emb.records {
        w.write_all(&r.camera.to_le_bytes())?;
        w.write_all(&r.local_id.to_le_bytes())?;
        w.write_all(&(r.frames.len() as u32).to_le_bytes())?;
        for &f in &r.frames {
            w.write_all(&f.to_le_bytes())?;
        }
        for &v in &r.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingFile, FormatError> {
    let file = path.display().to_string();
    let mut r = BufReader::new(std::fs::File::open(path)?);

    fn read_u16(r: &mut impl Read) -> std::io::Result<u16> {
        let mut b = [0u8; 2];
        r.read_exact(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }
    fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn read_f32(r: &mut impl Read) -> std::io::Result<f32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FormatError::invalid(&file, "bad magic bytes"));
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(FormatError::invalid(
            &file,
            format!("unsupported version {version}"),
        ));
    }
    let dim = read_u32(&mut r)?;
    if dim == 0 {
        return Err(FormatError::invalid(&file, "dimension must be positive"));
    }
    let count = read_u32(&mut r)?;
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let camera = read_u32(&mut r)?;
        let local_id = read_u32(&mut r)?;
        let n = read_u32(&mut r)? as usize;
        let mut frames = Vec::with_capacity(n);
        for _ in 0..n {
            frames.push(read_u32(&mut r)?);
        }
        let mut values = Vec::with_capacity(n * dim as usize);
        for _ in 0..n * dim as usize {
            let v = read_f32(&mut r)?;
            if !v.is_finite() {
                return Err(FormatError::invalid(
                    &file,
                    format!("camera {camera} track {local_id}: non-finite value"),
                ));
            }
            values.push(v);
        }
        records.push(EmbeddingRecord {
            camera,
            local_id,
            frames,
            values,
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(FormatError::invalid(&file, "trailing bytes after records"));
    }
    Ok(EmbeddingFile { dim, records })
}
