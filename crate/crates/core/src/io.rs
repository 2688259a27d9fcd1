//! File formats: the RAMap sequence binary and JSON-lines records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::radar::RaMap;
use crate::scalar::Scalar;

pub const RAMAP_MAGIC: &[u8; 4] = b"RODR";
pub const RAMAP_VERSION: u32 = 1;

fn u32_of(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("{what} {n} does not fit in u32")))
}

/// Writes a RAMap sequence: header, then each frame's cells as
/// `(re, im)` little-endian f32 pairs in range-major order. Frames must share
/// one grid; their position in the file is their frame index.
pub fn write_ramaps<T: Scalar, W: Write>(mut w: W, maps: &[RaMap<T>]) -> Result<()> {
    let (rows, cols) = maps.first().map_or((0, 0), |m| (m.range_bins, m.azimuth_bins));
    w.write_all(RAMAP_MAGIC)?;
    for v in [RAMAP_VERSION, u32_of(maps.len(), "frame count")?, u32_of(rows, "range bins")?, u32_of(cols, "azimuth bins")?] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(rows * cols * 8);
    for m in maps {
        if (m.range_bins, m.azimuth_bins) != (rows, cols) || m.cells.len() != rows * cols {
            return Err(Error::dims("RAMap frame", (rows, cols), (m.range_bins, m.azimuth_bins)));
        }
        buf.clear();
        for c in &m.cells {
            buf.extend_from_slice(&c.re.to_f32().unwrap_or(f32::NAN).to_le_bytes());
            buf.extend_from_slice(&c.im.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated RAMap header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_ramaps<T: Scalar, R: Read>(mut r: R) -> Result<Vec<RaMap<T>>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::Format(format!("truncated RAMap header: {e}")))?;
    if &magic != RAMAP_MAGIC {
        return Err(Error::Format(format!("bad RAMap magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != RAMAP_VERSION {
        return Err(Error::Format(format!("unsupported RAMap version {version}")));
    }
    let frames = read_u32(&mut r)? as usize;
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let mut buf = vec![0u8; rows * cols * 8];
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        r.read_exact(&mut buf).map_err(|e| Error::Format(format!("RAMap frame {f} truncated: {e}")))?;
        let cells = buf
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex::new(T::lit(re as f64), T::lit(im as f64))
            })
            .collect();
        out.push(RaMap { range_bins: rows, azimuth_bins: cols, frame_index: f, cells });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last RAMap frame".into()));
    }
    Ok(out)
}

pub fn save_ramaps<T: Scalar>(path: &Path, maps: &[RaMap<T>]) -> Result<()> {
    write_ramaps(BufWriter::new(File::create(path)?), maps)
}

pub fn load_ramaps<T: Scalar>(path: &Path) -> Result<Vec<RaMap<T>>> {
    read_ramaps(BufReader::new(File::open(path)?))
}

pub fn write_jsonl<S: Serialize, W: Write>(mut w: W, records: &[S]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one record per non-blank line.
pub fn read_jsonl<D: DeserializeOwned, R: BufRead>(r: R) -> Result<Vec<D>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

pub fn save_jsonl<S: Serialize>(path: &Path, records: &[S]) -> Result<()> {
    write_jsonl(BufWriter::new(File::create(path)?), records)
}

pub fn load_jsonl<D: DeserializeOwned>(path: &Path) -> Result<Vec<D>> {
    read_jsonl(BufReader::new(File::open(path)?))
}
