//! On-disk formats.
//!
//! | file                  | layout |
//! |-----------------------|--------|
//! | features (`PHFM`)     | magic, `u32` version 1, `u64` n, `u64` d, `n * d` `f32`, little endian, row-major |
//! | examples              | JSON Lines: `id`, `split`, `votes`, optional `high_disagreement`, `text`, `row` |
//! | category names        | JSON array of strings |
//! | head weights (`PHW1`) | magic, `u32` C, `u32` D, `W` row-major then `b`, `f32` little endian |
//! | posterior             | directory of numbered weight files plus `manifest.json` |
//! | predictive records    | JSON Lines: `id`, `mean_dist`, `h_tot`, `h_ale`, `h_epi` |

mod examples;
mod features;
mod tables;
mod weights;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub use examples::{
    load_dataset, read_category_names, read_examples, write_category_names, write_dataset,
    write_examples,
};
pub use features::{read_features, write_features, FEATURE_MAGIC, FEATURE_VERSION};
pub use tables::{
    read_records, write_learning_curve, write_records, write_reliability, write_risk_coverage,
};
pub use weights::{
    read_posterior, read_weights, write_posterior, write_weights, PosteriorManifest, WEIGHTS_MAGIC,
};

use crate::error::{Error, Result};

pub(crate) fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
