//! Sampler ablations: one axis at a time, the rest at their configured
//! values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use posthead_core::metrics::{evaluate, RunKey};
use posthead_core::stats::{
    bootstrap_ci, cohens_d_paired, cohens_d_pooled, one_way_anova, AnovaOneWay,
};
use posthead_core::trainers::{train_csgmcmc, SamplerConfig, TrainingSet};
use posthead_core::{rng, Method};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, LoadedData};
use crate::error::Result;
use crate::io;
use crate::runner::{build_pool, predict_split, run_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NCycles,
    Temperature,
    SamplesPerCycle,
    /// Extra samples-per-cycle levels, reported but not part of the main
    /// axis test.
    SupplementarySamplesPerCycle,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::NCycles => "n_cycles",
            Axis::Temperature => "temperature",
            Axis::SamplesPerCycle => "samples_per_cycle",
            Axis::SupplementarySamplesPerCycle => "supplementary_samples_per_cycle",
        }
    }

    fn apply(self, base: &SamplerConfig, level: f64) -> SamplerConfig {
        let mut c = base.clone();
        match self {
            Axis::NCycles => c.n_cycles = level as usize,
            Axis::Temperature => c.temperature = level,
            Axis::SamplesPerCycle | Axis::SupplementarySamplesPerCycle => {
                c.samples_per_cycle = level as usize
            }
        }
        c
    }
}

/// Result of one sampler setting and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub level: f64,
    pub seed: u64,
    pub members: usize,
    pub mean_h_tot_nats: f64,
    pub mean_h_epi_nats: f64,
    pub ece: f64,
    pub jsd_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEffect {
    pub a: f64,
    pub b: f64,
    /// Mean of `a - b` over seeds.
    pub mean_diff: f64,
    pub cohens_d_paired: Option<f64>,
    pub cohens_d_pooled: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub axis: Axis,
    pub levels: Vec<f64>,
    pub cells: Vec<AblationCell>,
    /// Mean total entropy per level, across seeds.
    pub level_means: Vec<f64>,
    pub anova: Option<AnovaOneWay>,
    pub pairwise: Vec<PairwiseEffect>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub config_hash: String,
    pub split: posthead_core::Split,
    pub label_mode: posthead_core::LabelMode,
    pub axes: Vec<AxisSummary>,
}

fn cell_key(config: &SamplerConfig, seed: u64) -> String {
    format!(
        "{}|{seed}",
        serde_json::to_string(config).expect("sampler config serializes")
    )
}

fn run_cell(
    ctx: &ExperimentConfig,
    data: &LoadedData,
    sampler: &SamplerConfig,
    seed: u64,
    level: f64,
) -> Result<AblationCell> {
    let ab = &ctx.ablation;
    let key = RunKey {
        method: Method::CyclicalSgmcmc,
        label_mode: ab.label_mode,
        seed,
    };
    let ds = &data.dataset;
    let set = TrainingSet::from_splits(ds, ab.label_mode);
    let samples = train_csgmcmc(&set, sampler, run_seed(&key, "train"))?;
    let records = predict_split(&samples, ds, &key, ab.split)?;
    let report = evaluate(
        &records,
        ds,
        ab.split,
        key,
        &ds.disagreement_rates(),
        ctx.metrics,
    )?;
    Ok(AblationCell {
        level,
        seed,
        members: samples.members.len(),
        mean_h_tot_nats: report.mean_h_tot_nats,
        mean_h_epi_nats: report.mean_h_epi_nats,
        ece: report.ece,
        jsd_bits: report.jsd_bits,
    })
}

/// Run every axis and summarize it.
pub fn run_ablation(
    config: &ExperimentConfig,
    data: &LoadedData,
    out: &Path,
) -> Result<AblationReport> {
    let ab = &config.ablation;
    let base = &config.trainer.sampler;
    let axes: Vec<(Axis, Vec<f64>)> = [
        (
            Axis::NCycles,
            ab.n_cycles.iter().map(|&v| v as f64).collect(),
        ),
        (Axis::Temperature, ab.temperature.clone()),
        (
            Axis::SamplesPerCycle,
            ab.samples_per_cycle.iter().map(|&v| v as f64).collect(),
        ),
        (
            Axis::SupplementarySamplesPerCycle,
            ab.supplementary_samples_per_cycle
                .iter()
                .map(|&v| v as f64)
                .collect(),
        ),
    ]
    .into_iter()
    .filter(|(_, levels)| !levels.is_empty())
    .collect();

    // Identical sampler settings (for example the canonical level shared by
    // several axes) are trained once.
    let mut jobs: BTreeMap<String, (SamplerConfig, u64)> = BTreeMap::new();
    for (axis, levels) in &axes {
        for &level in levels {
            let sampler = axis.apply(base, level);
            sampler.validate()?;
            for &seed in &ab.seeds {
                jobs.entry(cell_key(&sampler, seed))
                    .or_insert((sampler.clone(), seed));
            }
        }
    }
    let pool = build_pool(config.jobs)?;
    let job_list: Vec<(String, SamplerConfig, u64)> =
        jobs.into_iter().map(|(k, (c, s))| (k, c, s)).collect();
    let results: Vec<(String, Result<AblationCell>)> = pool.install(|| {
        job_list
            .par_iter()
            .map(|(k, c, s)| {
                log::info!(
                    "ablation cell n_cycles={} T={} S={} seed={s}",
                    c.n_cycles,
                    c.temperature,
                    c.samples_per_cycle
                );
                (k.clone(), run_cell(config, data, c, *s, 0.0))
            })
            .collect()
    });
    let mut done: BTreeMap<String, AblationCell> = BTreeMap::new();
    for (k, r) in results {
        done.insert(k, r?);
    }

    let mut summaries = Vec::new();
    for (axis, levels) in axes {
        let mut cells = Vec::new();
        for &level in &levels {
            let sampler = axis.apply(base, level);
            for &seed in &ab.seeds {
                let mut cell = done[&cell_key(&sampler, seed)].clone();
                cell.level = level;
                cells.push(cell);
            }
        }
        summaries.push(summarize_axis(axis, levels, cells, config.stats.n_boot));
    }
    let report = AblationReport {
        config_hash: config.hash(&data.digest)?,
        split: ab.split,
        label_mode: ab.label_mode,
        axes: summaries,
    };
    io::write_json(&out.join("ablation").join("ablation.json"), &report)?;
    io::write_text(
        &out.join("ablation").join("ablation.txt"),
        &report.summary(),
    )?;
    Ok(report)
}

/// One-way ANOVA and pairwise effects of the total entropy across levels.
pub fn summarize_axis(
    axis: Axis,
    levels: Vec<f64>,
    cells: Vec<AblationCell>,
    n_boot: usize,
) -> AxisSummary {
    let groups: Vec<Vec<f64>> = levels
        .iter()
        .map(|&l| {
            let mut g: Vec<&AblationCell> = cells.iter().filter(|c| c.level == l).collect();
            g.sort_by_key(|c| c.seed);
            g.into_iter().map(|c| c.mean_h_tot_nats).collect()
        })
        .collect();
    let level_means = groups
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len().max(1) as f64)
        .collect();
    let mut notes = Vec::new();
    let anova = match one_way_anova(&groups) {
        Ok(a) => Some(a),
        Err(e) => {
            notes.push(format!("anova: {e}"));
            None
        }
    };
    let mut pairwise = Vec::new();
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            let (a, b) = (&groups[i], &groups[j]);
            let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let seed = rng::derive_seed(0, &["ablation", axis.as_str(), &format!("{i}-{j}")]);
            pairwise.push(PairwiseEffect {
                a: levels[i],
                b: levels[j],
                mean_diff: diffs.iter().sum::<f64>() / diffs.len().max(1) as f64,
                cohens_d_paired: cohens_d_paired(a, b),
                cohens_d_pooled: cohens_d_pooled(a, b),
                ci: bootstrap_ci(&diffs, n_boot, seed).ok(),
            });
        }
    }
    AxisSummary {
        axis,
        levels,
        cells,
        level_means,
        anova,
        pairwise,
        notes,
    }
}

impl AblationReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for a in &self.axes {
            let _ = writeln!(s, "[{}]", a.axis.as_str());
            for (l, m) in a.levels.iter().zip(&a.level_means) {
                let _ = writeln!(s, "  level {l:<6} mean H_tot = {m:.4} nats");
            }
            if let Some(an) = &a.anova {
                let _ = writeln!(
                    s,
                    "  anova F({}, {}) = {}  p = {}  eta^2 = {}",
                    an.df_between,
                    an.df_within,
                    fmt_opt(an.f),
                    fmt_opt(an.p),
                    fmt_opt(an.partial_eta_sq)
                );
            }
            for p in &a.pairwise {
                let _ = writeln!(
                    s,
                    "  {} vs {}: diff = {:+.4}  d_paired = {}  d_pooled = {}",
                    p.a,
                    p.b,
                    p.mean_diff,
                    fmt_opt(p.cohens_d_paired),
                    fmt_opt(p.cohens_d_pooled)
                );
            }
            for n in &a.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}
