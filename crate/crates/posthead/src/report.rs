//! Flat tables built from a finished grid.

use std::collections::BTreeMap;
use std::path::Path;

use posthead_core::metrics::MetricReport;
use posthead_core::{LabelMode, Method, Split};

use crate::error::{Error, Result};
use crate::io;
use crate::runner::RunReportBundle;

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

/// `grid.csv`: one row per run and split. `summary.csv`: means over seeds.
pub fn write_report(out: &Path) -> Result<RunReportBundle> {
    let bundle: RunReportBundle = io::read_json(&out.join("bundle.json"))?;
    let grid = out.join("grid.csv");
    let mut w = csv::Writer::from_writer(io::create(&grid)?);
    let mut header = vec!["split", "method", "label_mode", "seed", "n_examples"];
    header.extend(MetricReport::SCALARS);
    w.write_record(&header)?;
    let mut groups: BTreeMap<(Split, Method, LabelMode), Vec<&MetricReport>> = BTreeMap::new();
    for r in &bundle.reports {
        let mut row = vec![
            r.split.as_str().to_string(),
            r.method.as_str().to_string(),
            r.label_mode.as_str().to_string(),
            r.seed.to_string(),
            r.n_examples.to_string(),
        ];
        row.extend(MetricReport::SCALARS.iter().map(|m| cell(r.scalar(m))));
        w.write_record(&row)?;
        groups
            .entry((r.split, r.method, r.label_mode))
            .or_default()
            .push(r);
    }
    w.flush().map_err(|e| Error::io(&grid, e))?;

    let summary = out.join("summary.csv");
    let mut w = csv::Writer::from_writer(io::create(&summary)?);
    let mut header = vec!["split", "method", "label_mode", "n_seeds"];
    header.extend(MetricReport::SCALARS);
    w.write_record(&header)?;
    for ((split, method, label), reports) in &groups {
        let mut row = vec![
            split.as_str().to_string(),
            method.as_str().to_string(),
            label.as_str().to_string(),
            reports.len().to_string(),
        ];
        for m in MetricReport::SCALARS {
            let vals: Vec<f64> = reports.iter().filter_map(|r| r.scalar(m)).collect();
            row.push(if vals.is_empty() {
                String::new()
            } else {
                format!("{}", vals.iter().sum::<f64>() / vals.len() as f64)
            });
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;
    Ok(bundle)
}
