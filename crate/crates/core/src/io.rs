//! `T3F1` tensor files.
//!
//! Layout: the 4-byte magic `T3F1`, three little-endian `u64` dims
//! `m1, m2, m3`, then `m1 * m2 * m3` little-endian `f64` values in storage
//! order (slice-major, row-major within a slice). Masks use the same
//! container with 0.0/1.0 payloads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub const MAGIC: &[u8; 4] = b"T3F1";
const HEADER_LEN: usize = 4 + 3 * 8;

pub fn write_tensor<W: Write>(mut w: W, x: &Tensor3) -> Result<()> {
    w.write_all(MAGIC)?;
    for d in x.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(x.len() * 8);
    for v in x.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<Tensor3> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"T3F1\"",
            String::from_utf8_lossy(&header[..4])
        )));
    }
    let mut dims = [0usize; 3];
    for (i, d) in dims.iter_mut().enumerate() {
        let raw = u64::from_le_bytes(header[4 + 8 * i..12 + 8 * i].try_into().unwrap());
        *d = usize::try_from(raw)
            .map_err(|_| Error::Format(format!("dimension {raw} too large")))?;
    }
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(8).map(|_| n))
        .ok_or_else(|| Error::Format(format!("dimensions {dims:?} overflow")))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != n * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, header {dims:?} needs {}",
            payload.len(),
            n * 8
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor3::from_vec(dims, data)
}

pub fn save(path: impl AsRef<Path>, x: &Tensor3) -> Result<()> {
    write_tensor(BufWriter::new(File::create(path)?), x)
}

pub fn load(path: impl AsRef<Path>) -> Result<Tensor3> {
    read_tensor(BufReader::new(File::open(path)?))
}
