use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use posthead_core::data::ExampleRecord;
use posthead_core::{Dataset, Split};
use serde::{Deserialize, Serialize};

use super::{create, read_features, write_features};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ExampleLine {
    id: String,
    split: Split,
    votes: Vec<usize>,
    #[serde(default)]
    high_disagreement: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row: Option<usize>,
}

pub fn read_examples(path: &Path) -> Result<Vec<ExampleRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExampleLine = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(ExampleRecord {
            id: rec.id,
            row: rec.row,
            split: rec.split,
            votes: rec.votes,
            high_disagreement: rec.high_disagreement,
        });
    }
    Ok(out)
}

pub fn write_examples(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = create(path)?;
    for ex in dataset.examples() {
        let line = ExampleLine {
            id: ex.id.clone(),
            split: ex.split,
            votes: ex.annotations.clone(),
            high_disagreement: ex.high_disagreement,
            text: None,
            row: Some(ex.row),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_category_names(path: &Path) -> Result<Vec<String>> {
    super::read_json(path)
}

pub fn write_category_names(path: &Path, names: &[String]) -> Result<()> {
    super::write_json(path, names)
}

/// Load and validate a dataset. The category count comes from the names
/// file when given, else from the largest vote index.
pub fn load_dataset(
    features: &Path,
    examples: &Path,
    categories: Option<&Path>,
) -> Result<Dataset> {
    let matrix = read_features(features)?;
    let records = read_examples(examples)?;
    let names = categories
        .map(read_category_names)
        .transpose()?
        .unwrap_or_default();
    let n_categories = if names.is_empty() {
        records
            .iter()
            .flat_map(|r| r.votes.iter())
            .max()
            .map_or(0, |m| m + 1)
    } else {
        names.len()
    };
    Ok(Dataset::from_records(matrix, records, n_categories, names)?)
}

/// Write the three files that [`load_dataset`] reads back.
pub fn write_dataset(
    dataset: &Dataset,
    features: &Path,
    examples: &Path,
    categories: &Path,
) -> Result<()> {
    write_features(features, dataset.features())?;
    write_examples(examples, dataset)?;
    write_category_names(categories, dataset.category_names())
}
