use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use posthead_core::FeatureMatrix;

use super::create;
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"PHFM";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; HEADER_LEN];
    file.read_exact(&mut header)
        .map_err(|_| Error::format(path, "truncated feature header"))?;
    if &header[..4] != FEATURE_MAGIC {
        return Err(Error::format(path, "not a feature file (bad magic)"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != FEATURE_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported feature file version {version}"),
        ));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let d = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes"));
    let count = n
        .checked_mul(d)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::format(path, "feature matrix dimensions overflow"))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() != count * 4 {
        return Err(Error::format(
            path,
            format!(
                "expected {} bytes of float data for {n} x {d}, found {}",
                count * 4,
                bytes.len()
            ),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(FeatureMatrix::new(n as usize, d as usize, values)?)
}

pub fn write_features(path: &Path, features: &FeatureMatrix) -> Result<()> {
    let mut w = create(path)?;
    let mut write = |b: &[u8]| w.write_all(b).map_err(|e| Error::io(path, e));
    write(FEATURE_MAGIC)?;
    write(&FEATURE_VERSION.to_le_bytes())?;
    write(&(features.n_examples() as u64).to_le_bytes())?;
    write(&(features.dim() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(features.values().len() * 4);
    for v in features.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    write(&buf)?;
    w.flush().map_err(|e| Error::io(path, e))
}
