//! Little-endian binary snapshots: a 32-byte header (magic, nx, ny, field
//! count, time, 8 reserved zero bytes) followed by `field_count` planes of
//! `nx·ny` f64 values in row-major node order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"TVS1";
const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("snapshot plane {index} has {len} values, expected {expected}")]
    BadPlane { index: usize, len: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub time: f64,
    pub fields: Vec<Vec<f64>>,
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<(), SnapshotError> {
    let expected = snap.nx * snap.ny;
    for (index, f) in snap.fields.iter().enumerate() {
        if f.len() != expected {
            return Err(SnapshotError::BadPlane { index, len: f.len(), expected });
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&SNAPSHOT_MAGIC);
    header[4..8].copy_from_slice(&(snap.nx as u32).to_le_bytes());
    header[8..12].copy_from_slice(&(snap.ny as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(snap.fields.len() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&snap.time.to_le_bytes());
    w.write_all(&header)?;
    for f in &snap.fields {
        for v in f {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[0..4] != SNAPSHOT_MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize;
    let (nx, ny, count) = (u32_at(4), u32_at(8), u32_at(12));
    let time = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let mut fields = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        let mut plane = Vec::with_capacity(nx * ny);
        for _ in 0..nx * ny {
            r.read_exact(&mut buf)?;
            plane.push(f64::from_le_bytes(buf));
        }
        fields.push(plane);
    }
    Ok(Snapshot { nx, ny, time, fields })
}
