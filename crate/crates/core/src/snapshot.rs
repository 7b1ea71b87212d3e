//! Binary snapshots.
//!
//! A 64-byte little-endian header
//!
//! ```text
//! offset  0  magic "CHFL"
//!         4  version      u32
//!         8  N            u32
//!        12  L            f64
//!        20  t            f64
//!        28  alpha        f64
//!        36  field count  u32
//!        40  reserved, zero
//! ```
//!
//! is followed by the fields `n, c, u₁, u₂`, each `N²` little-endian f64 in
//! row-major order (row index `x₂`).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::State;
use crate::spectral::{Field, SpectralGrid, VectorField};

pub const MAGIC: [u8; 4] = *b"CHFL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;
pub const FIELD_COUNT: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub alpha: f64,
    pub state: State,
}

pub fn write_snapshot<W: Write>(snap: &Snapshot, mut out: W) -> Result<()> {
    let grid = snap.state.grid();
    let n = u32::try_from(grid.n()).map_err(|_| Error::Snapshot("grid too large".into()))?;
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&n.to_le_bytes());
    header[12..20].copy_from_slice(&grid.side_length().to_le_bytes());
    header[20..28].copy_from_slice(&snap.t.to_le_bytes());
    header[28..36].copy_from_slice(&snap.alpha.to_le_bytes());
    header[36..40].copy_from_slice(&FIELD_COUNT.to_le_bytes());
    out.write_all(&header)?;
    let s = &snap.state;
    let mut body = Vec::with_capacity(4 * grid.len() * 8);
    for f in [&s.n, &s.c, &s.u.components[0], &s.u.components[1]] {
        for v in f.samples() {
            body.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&body)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<Snapshot> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Snapshot("truncated header".into()))?;
    if header[0..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let count = u32_at(36);
    if count != FIELD_COUNT {
        return Err(Error::Snapshot(format!("expected {FIELD_COUNT} fields, found {count}")));
    }
    if header[40..].iter().any(|&b| b != 0) {
        return Err(Error::Snapshot("reserved header bytes are not zero".into()));
    }
    let grid = SpectralGrid::new(u32_at(8) as usize, f64_at(12))
        .map_err(|e| Error::Snapshot(format!("invalid grid: {e}")))?;
    let (t, alpha) = (f64_at(20), f64_at(28));

    let len = grid.len();
    let mut bytes = vec![0u8; 4 * len * 8];
    input
        .read_exact(&mut bytes)
        .map_err(|_| Error::Snapshot("truncated field data".into()))?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Snapshot("trailing bytes after field data".into()));
    }
    let mut fields = bytes.chunks_exact(len * 8).map(|chunk| {
        let samples = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        Field::new(&grid, samples)
    });
    let mut next = || fields.next().expect("four fields");
    let n = next()?;
    let c = next()?;
    let u = VectorField::new(next()?, next()?)?;
    Ok(Snapshot {
        t,
        alpha,
        state: State::new(n, c, u)?,
    })
}

pub fn write_snapshot_file(snap: &Snapshot, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_snapshot(snap, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_file(path: &Path) -> Result<Snapshot> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file))
}
