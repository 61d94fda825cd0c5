use std::fs;
use std::io::Write;
use std::path::Path;

use posthead_core::trainers::DropoutSpec;
use posthead_core::{HeadWeights, LabelMode, Method, PosteriorSamples};
use serde::{Deserialize, Serialize};

use super::{create, read_json, write_json};
use crate::error::{Error, Result};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"PHW1";

pub fn write_weights(path: &Path, weights: &HeadWeights) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + weights.params().len() * 4);
    buf.extend_from_slice(WEIGHTS_MAGIC);
    buf.extend_from_slice(&(weights.classes() as u32).to_le_bytes());
    buf.extend_from_slice(&(weights.dim() as u32).to_le_bytes());
    for v in weights.params() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut w = create(path)?;
    w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_weights(path: &Path) -> Result<HeadWeights> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[..4] != WEIGHTS_MAGIC {
        return Err(Error::format(path, "not a head weights file (bad magic)"));
    }
    let c = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = &bytes[12..];
    if body.len() != (c * d + c) * 4 {
        return Err(Error::format(
            path,
            format!("weight payload does not match {c} x {d}"),
        ));
    }
    let params = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    Ok(HeadWeights::from_flat(c, d, params)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorManifest {
    pub method: Method,
    pub label_mode: LabelMode,
    pub seed: u64,
    pub config_hash: String,
    pub member_count: usize,
    pub classes: usize,
    pub dim: usize,
    #[serde(default)]
    pub dropout: Option<DropoutSpec>,
    pub files: Vec<String>,
}

pub fn write_posterior(dir: &Path, samples: &PosteriorSamples, config_hash: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(samples.members.len());
    for (i, m) in samples.members.iter().enumerate() {
        let name = format!("member_{i:03}.phw");
        write_weights(&dir.join(&name), m)?;
        files.push(name);
    }
    let manifest = PosteriorManifest {
        method: samples.method,
        label_mode: samples.label_mode,
        seed: samples.seed,
        config_hash: config_hash.to_string(),
        member_count: samples.members.len(),
        classes: samples.classes(),
        dim: samples.dim(),
        dropout: samples.dropout,
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

pub fn read_posterior(dir: &Path) -> Result<(PosteriorSamples, PosteriorManifest)> {
    let manifest: PosteriorManifest = read_json(&dir.join("manifest.json"))?;
    if manifest.files.len() != manifest.member_count {
        return Err(Error::format(
            dir,
            "manifest member count does not match its file list",
        ));
    }
    let members = manifest
        .files
        .iter()
        .map(|f| read_weights(&dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let samples = PosteriorSamples {
        method: manifest.method,
        label_mode: manifest.label_mode,
        seed: manifest.seed,
        members,
        dropout: manifest.dropout,
    };
    Ok((samples, manifest))
}
