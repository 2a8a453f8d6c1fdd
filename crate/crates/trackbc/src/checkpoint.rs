//! Binary checkpoint container.
//!
//! ```text
//! magic "TBCK" | version u32
//! input_dim, hidden, layers, output_dim, m: u32 each
//! normalization mean[4], scale[4]: f64
//! training metadata: u32 length + JSON
//! tensor count u32, then per tensor:
//!     name: u16 length + UTF-8 | rows u32 | cols u32 | rows*cols f64
//! ```
//!
//! Integers and floats are little-endian. Tensors are stored in layout order
//! and must match the shape exactly.

use std::path::Path;

use trackbc_core::net::{NetworkCheckpoint, NetworkParams, NetworkShape, Normalization, TrainMeta};

use crate::{fsio, Error, Result};

pub const MAGIC: &[u8; 4] = b"TBCK";
pub const VERSION: u32 = 1;

pub fn encode(ck: &NetworkCheckpoint) -> Vec<u8> {
    let shape = ck.shape();
    let mut b = Vec::with_capacity(64 + 8 * ck.params.values.len());
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    for d in [
        shape.input_dim,
        shape.hidden,
        shape.layers,
        shape.output_dim,
        shape.m,
    ] {
        b.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in ck.normalization.mean.iter().chain(&ck.normalization.scale) {
        b.extend_from_slice(&v.to_le_bytes());
    }
    let meta = serde_json::to_vec(&ck.meta).expect("metadata serializes");
    b.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    b.extend_from_slice(&meta);
    let tensors = shape.tensors();
    b.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        b.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        b.extend_from_slice(t.name.as_bytes());
        b.extend_from_slice(&(t.rows as u32).to_le_bytes());
        b.extend_from_slice(&(t.cols as u32).to_le_bytes());
        for v in &ck.params.values[t.range()] {
            b.extend_from_slice(&v.to_le_bytes());
        }
    }
    b
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| self.bad(format!("truncated at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn bad(&self, message: String) -> Error {
        Error::parse(self.path, 0, message)
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<NetworkCheckpoint> {
    let mut r = Reader { bytes, at: 0, path };
    if r.take(4)? != MAGIC {
        return Err(r.bad("not a trackbc checkpoint".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Version {
            path: path.into(),
            version,
        });
    }
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let [input_dim, hidden, layers, output_dim, m] = dims;
    let shape = NetworkShape {
        input_dim,
        hidden,
        layers,
        output_dim,
        m,
    };
    shape.validate()?;
    let mut norm = [0.0; 8];
    for v in &mut norm {
        *v = r.f64()?;
    }
    let meta_len = r.u32()? as usize;
    let meta: TrainMeta =
        serde_json::from_slice(r.take(meta_len)?).map_err(|e| r.bad(format!("metadata: {e}")))?;

    let expected = shape.tensors();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(r.bad(format!("{count} tensors, shape needs {}", expected.len())));
    }
    let mut params = NetworkParams::zeros(shape);
    for t in &expected {
        let n = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(n)?)
            .map_err(|_| r.bad("tensor name is not UTF-8".into()))?;
        let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
        if name != t.name || rows != t.rows || cols != t.cols {
            return Err(r.bad(format!(
                "tensor {name} {rows}x{cols}, expected {} {}x{}",
                t.name, t.rows, t.cols
            )));
        }
        for v in &mut params.values[t.range()] {
            *v = r.f64()?;
        }
    }
    if r.at != bytes.len() {
        return Err(r.bad(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let mut mean = [0.0; 4];
    let mut scale = [0.0; 4];
    mean.copy_from_slice(&norm[..4]);
    scale.copy_from_slice(&norm[4..]);
    Ok(NetworkCheckpoint {
        params,
        normalization: Normalization { mean, scale },
        meta,
    })
}

pub fn read_checkpoint(path: &Path) -> Result<NetworkCheckpoint> {
    decode(&fsio::read(path)?, path)
}

pub fn write_checkpoint(path: &Path, ck: &NetworkCheckpoint) -> Result<()> {
    fsio::atomic_write(path, &encode(ck))
}
