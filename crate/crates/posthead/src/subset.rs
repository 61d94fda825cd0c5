//! Divergence on the high-disagreement validation subset.

use std::collections::BTreeMap;
use std::path::Path;

use posthead_core::data::SubsetFilter;
use posthead_core::metrics::divergence_summary;
use posthead_core::stats::{paired_t, PairedT};
use posthead_core::{LabelMode, Method, Split};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, LoadedData};
use crate::error::Result;
use crate::io;
use crate::runner::{grid_keys, run_dir, RunName};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub method: Method,
    pub label_mode: LabelMode,
    pub seed: u64,
    pub n_examples: usize,
    pub jsd_bits: f64,
    pub kl_nats: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDiagnostic {
    pub subset_size: usize,
    pub rows: Vec<SubsetRow>,
    /// Proposed against the deep ensemble, per label mode, on JSD.
    pub proposed_vs_b2: BTreeMap<String, PairedT>,
    pub notes: Vec<String>,
}

/// The high-disagreement validation examples.
pub fn default_filter() -> SubsetFilter {
    SubsetFilter {
        high_disagreement: Some(true),
        ..SubsetFilter::split(Split::Validation)
    }
}

/// Reads the validation records of every grid run found under `out` and
/// writes `subset_diagnostic.json`.
pub fn subset_diagnostic(
    config: &ExperimentConfig,
    data: &LoadedData,
    out: &Path,
) -> Result<SubsetDiagnostic> {
    let diag = subset_diagnostic_with(config, data, out, default_filter())?;
    io::write_json(&out.join("subset_diagnostic.json"), &diag)?;
    Ok(diag)
}

/// As [`subset_diagnostic`] for any subset of the validation split, without
/// writing anything.
pub fn subset_diagnostic_with(
    config: &ExperimentConfig,
    data: &LoadedData,
    out: &Path,
    filter: SubsetFilter,
) -> Result<SubsetDiagnostic> {
    let ds = &data.dataset;
    let subset: std::collections::BTreeSet<usize> = ds.subset_view(filter).into_iter().collect();
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    if subset.is_empty() {
        notes.push(
            "no validation example is flagged high-disagreement; diagnostic skipped".to_string(),
        );
    } else {
        for key in grid_keys(config) {
            let path = run_dir(out, &key).join("records_validation.jsonl");
            let records = match io::read_records(&path, ds) {
                Ok(r) => r,
                Err(e) => {
                    notes.push(format!("{}: {e}", RunName(&key)));
                    continue;
                }
            };
            let chosen: Vec<_> = records
                .iter()
                .filter(|r| subset.contains(&r.example))
                .collect();
            if chosen.is_empty() {
                continue;
            }
            let d = divergence_summary(chosen.iter().map(|r| {
                (
                    ds.example(r.example).soft_label.as_slice(),
                    r.mean_dist.as_slice(),
                )
            }));
            rows.push(SubsetRow {
                method: key.method,
                label_mode: key.label_mode,
                seed: key.seed,
                n_examples: chosen.len(),
                jsd_bits: d.jsd_bits,
                kl_nats: d.kl_nats,
            });
        }
    }
    let mut proposed_vs_b2 = BTreeMap::new();
    for label_mode in LabelMode::ALL {
        let series = |m: Method| {
            let mut v: Vec<&SubsetRow> = rows
                .iter()
                .filter(|r| r.method == m && r.label_mode == label_mode)
                .collect();
            v.sort_by_key(|r| r.seed);
            v.into_iter().map(|r| r.jsd_bits).collect::<Vec<f64>>()
        };
        let (p, b) = (series(Method::CyclicalSgmcmc), series(Method::DeepEnsemble));
        if p.is_empty() || b.is_empty() {
            continue;
        }
        match paired_t(&p, &b) {
            Ok(t) => {
                proposed_vs_b2.insert(label_mode.as_str().to_string(), t);
            }
            Err(e) => notes.push(format!("{} paired test: {e}", label_mode.as_str())),
        }
    }
    Ok(SubsetDiagnostic {
        subset_size: subset.len(),
        rows,
        proposed_vs_b2,
        notes,
    })
}
