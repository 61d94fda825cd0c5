//! Active-learning orchestration over strategies and seeds.

use std::path::Path;

use posthead_core::active::{run_al_loop, AlConfig, LearningCurve, Strategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, LoadedData};
use crate::error::Result;
use crate::io;
use crate::runner::build_pool;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlEntry {
    pub strategy: Strategy,
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub final_accuracy: Option<f64>,
    pub final_macro_f1: Option<f64>,
    pub degenerate_scores: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlSummary {
    pub config_hash: String,
    pub excluded_categories: Vec<String>,
    pub entries: Vec<AlEntry>,
    /// Per strategy: mean accuracy per iteration across seeds that finished.
    pub mean_curves: Vec<(Strategy, Vec<f64>)>,
}

impl AlSummary {
    pub fn partial(&self) -> bool {
        self.entries.iter().any(|e| !e.ok)
    }
}

pub fn al_config(config: &ExperimentConfig, strategy: Strategy, exclude: Vec<usize>) -> AlConfig {
    let a = &config.active;
    AlConfig {
        n_iterations: a.n_iterations,
        batch_per_iter: a.batch_per_iter,
        initial_size: a.initial_size,
        strategy,
        label_mode: a.label_mode,
        sampler: a.sampler.clone(),
        exclude_categories: exclude,
    }
}

pub fn run_al(config: &ExperimentConfig, data: &LoadedData, out: &Path) -> Result<AlSummary> {
    let ds = &data.dataset;
    let exclude = config.excluded_categories(ds)?;
    let mut jobs = Vec::new();
    for &strategy in &config.active.strategies {
        for &seed in &config.active.seeds {
            jobs.push((strategy, seed));
        }
    }
    let pool = build_pool(config.jobs)?;
    let results: Vec<(Strategy, u64, posthead_core::Result<LearningCurve>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(strategy, seed)| {
                log::info!("active learning {} seed {seed}", strategy.as_str());
                (
                    strategy,
                    seed,
                    run_al_loop(ds, &al_config(config, strategy, exclude.clone()), seed),
                )
            })
            .collect()
    });
    let dir = out.join("al");
    let mut entries = Vec::new();
    let mut curves: Vec<LearningCurve> = Vec::new();
    for (strategy, seed, r) in results {
        match r {
            Ok(curve) => {
                let stem = format!("{}-{seed}", strategy.as_str());
                io::write_learning_curve(
                    &dir.join(format!("{stem}.csv")),
                    &curve,
                    ds.category_names(),
                )?;
                io::write_json(&dir.join(format!("{stem}.json")), &curve)?;
                let last = curve.points.last();
                entries.push(AlEntry {
                    strategy,
                    seed,
                    ok: true,
                    error: None,
                    final_accuracy: last.map(|p| p.accuracy),
                    final_macro_f1: last.map(|p| p.macro_f1),
                    degenerate_scores: curve.degenerate_scores,
                });
                curves.push(curve);
            }
            Err(e) => {
                log::error!(
                    "active learning {} seed {seed} failed: {e}",
                    strategy.as_str()
                );
                entries.push(AlEntry {
                    strategy,
                    seed,
                    ok: false,
                    error: Some(e.to_string()),
                    final_accuracy: None,
                    final_macro_f1: None,
                    degenerate_scores: false,
                });
            }
        }
    }
    let mean_curves = config
        .active
        .strategies
        .iter()
        .map(|&s| {
            let mine: Vec<&LearningCurve> = curves.iter().filter(|c| c.strategy == s).collect();
            let n = mine.iter().map(|c| c.points.len()).min().unwrap_or(0);
            let mean = (0..n)
                .map(|i| mine.iter().map(|c| c.points[i].accuracy).sum::<f64>() / mine.len() as f64)
                .collect();
            (s, mean)
        })
        .collect();
    let summary = AlSummary {
        config_hash: config.hash(&data.digest)?,
        excluded_categories: exclude
            .iter()
            .map(|&c| ds.category_name(c).to_string())
            .collect(),
        entries,
        mean_curves,
    };
    io::write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
