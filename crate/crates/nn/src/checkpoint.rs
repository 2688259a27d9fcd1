//! `RODW` parameter checkpoints: magic, u32 version, u32 tensor count, then
//! per tensor a u16 name length, the name, a u8 rank, u32 dims and f32
//! payload, all little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rodkit_core::{Error, Result, Scalar};

use crate::params::{Param, ParamStore};

pub const MAGIC: &[u8; 4] = b"RODW";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<T: Scalar, W: Write>(mut w: W, params: &ParamStore<T>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for p in params.iter() {
        let name = p.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| Error::Format(format!("tensor name too long: {}", p.name)))?;
        let rank = u8::try_from(p.shape.len()).map_err(|_| Error::Format(format!("tensor rank too large: {}", p.name)))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&[rank])?;
        for &d in &p.shape {
            w.write_all(&u32::try_from(d).map_err(|_| Error::Format("dimension exceeds u32".into()))?.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(p.data.len() * 4);
        for v in &p.data {
            buf.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated checkpoint: {e}")))?;
    Ok(b)
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R) -> Result<ParamStore<T>> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Format("not a RODW checkpoint".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = u32::from_le_bytes(take(&mut r)?);
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = u16::from_le_bytes(take(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(|e| Error::Format(format!("truncated checkpoint: {e}")))?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let rank = take::<1, _>(&mut r)?[0] as usize;
        let shape: Vec<usize> = (0..rank).map(|_| take::<4, _>(&mut r).map(|b| u32::from_le_bytes(b) as usize)).collect::<Result<_>>()?;
        let n: usize = shape.iter().product();
        let mut buf = vec![0u8; n * 4];
        r.read_exact(&mut buf).map_err(|e| Error::Format(format!("tensor {name:?} truncated: {e}")))?;
        let data = buf.chunks_exact(4).map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)).collect();
        store.push(Param { name, shape, data });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last checkpoint tensor".into()));
    }
    Ok(store)
}

pub fn save_checkpoint<T: Scalar>(path: &Path, params: &ParamStore<T>) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), params)
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<ParamStore<T>> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
