//! Binary `.tt` tensor files.
//!
//! Layout: magic `TTEN`, version `u32` LE (= 1), `n`, `p`, `l` as `u64` LE,
//! then `n*p*l` `f64` LE values in the tensor's storage order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, TlsError};
use crate::tensor::TubalTensor;

pub const MAGIC: &[u8; 4] = b"TTEN";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 3 * 8;

pub fn encode(x: &TubalTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * x.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [x.n(), x.p(), x.l()] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a `.tt` byte stream; `reason` strings feed `TlsError::Format`.
pub fn decode(bytes: &[u8]) -> std::result::Result<TubalTensor, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return Err("bad magic, expected TTEN".into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let dim = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (n, p, l) = (dim(8), dim(16), dim(24));
    let count = n
        .checked_mul(p)
        .and_then(|v| v.checked_mul(l))
        .filter(|&c| c.checked_mul(8).is_some())
        .ok_or("dimension overflow")? as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * 8 {
        return Err(format!("expected {} data bytes, found {}", count * 8, body.len()));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    TubalTensor::new(n as usize, p as usize, l as usize, data).map_err(|e| e.to_string())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<TubalTensor> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| TlsError::io(path, e))?;
    decode(&bytes).map_err(|reason| TlsError::Format {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn write_tensor(path: impl AsRef<Path>, x: &TubalTensor) -> Result<()> {
    let path = path.as_ref();
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&encode(x)))
        .map_err(|e| TlsError::io(path, e))
}
