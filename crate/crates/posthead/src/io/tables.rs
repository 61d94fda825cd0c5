use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use posthead_core::active::LearningCurve;
use posthead_core::metrics::{ReliabilityBin, RiskCoverage};
use posthead_core::{Dataset, PredictiveRecord};
use serde::Serialize;

use super::{create, write_json};
use crate::error::{Error, Result};

pub fn write_records(path: &Path, records: &[PredictiveRecord]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read records back, resolving ids against `dataset`.
pub fn read_records(path: &Path, dataset: &Dataset) -> Result<Vec<PredictiveRecord>> {
    let index: HashMap<&str, usize> = dataset
        .examples()
        .iter()
        .enumerate()
        .map(|(i, ex)| (ex.id.as_str(), i))
        .collect();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut rec: PredictiveRecord =
            serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        rec.example = *index
            .get(rec.id.as_str())
            .ok_or_else(|| bad(format!("unknown example id `{}`", rec.id)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_risk_coverage(path: &Path, rc: &RiskCoverage) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["coverage", "risk"])?;
    for (c, r) in rc.coverage.iter().zip(&rc.risk) {
        w.write_record([c.to_string(), r.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_reliability(path: &Path, bins: &[ReliabilityBin]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["lower", "upper", "count", "mean_confidence", "accuracy"])?;
    for b in bins {
        w.write_record([
            b.lower.to_string(),
            b.upper.to_string(),
            b.count.to_string(),
            b.mean_confidence.to_string(),
            b.accuracy.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct HistogramSidecar<'a> {
    strategy: &'a str,
    seed: u64,
    categories: &'a [String],
    initial_size: usize,
    /// One row per iteration: acquired count per category.
    acquired_per_class: Vec<&'a [usize]>,
    degenerate_scores: bool,
}

/// Learning curve as CSV plus a JSON sidecar (`<stem>.histogram.json`)
/// with the per-class acquisition counts.
pub fn write_learning_curve(
    path: &Path,
    curve: &LearningCurve,
    categories: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iteration", "n_labeled", "accuracy", "macro_f1"])?;
    for p in &curve.points {
        w.write_record([
            p.iteration.to_string(),
            p.n_labeled.to_string(),
            p.accuracy.to_string(),
            p.macro_f1.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let sidecar = HistogramSidecar {
        strategy: curve.strategy.as_str(),
        seed: curve.seed,
        categories,
        initial_size: curve.initial.len(),
        acquired_per_class: curve
            .points
            .iter()
            .map(|p| p.acquired_per_class.as_slice())
            .collect(),
        degenerate_scores: curve.degenerate_scores,
    };
    write_json(&path.with_extension("histogram.json"), &sidecar)
}
