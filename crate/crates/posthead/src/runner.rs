//! The main grid: train, predict, score and temperature-scale every
//! (method, label mode, seed) run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use posthead_core::calibrate::{
    apply_temperature, fit_temperature, rank_stability, RankStability, TemperatureFit,
};
use posthead_core::metrics::{evaluate, risk_coverage, MetricReport, RunKey};
use posthead_core::trainers::{train, TrainingSet};
use posthead_core::uncertainty::{predict, PredictOptions};
use posthead_core::{rng, Dataset, LabelMode, Method, PosteriorSamples, PredictiveRecord, Split};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, LoadedData};
use crate::error::{Error, Result};
use crate::io;
use crate::stats_pass::{grid_stats, GridStats};

pub const VERSION: &str = concat!("posthead ", env!("CARGO_PKG_VERSION"));

/// Restricts a verb to matching runs; absent fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunFilter {
    pub methods: Vec<Method>,
    pub label_modes: Vec<LabelMode>,
    pub seeds: Vec<u64>,
}

impl RunFilter {
    pub fn matches(&self, key: &RunKey) -> bool {
        (self.methods.is_empty() || self.methods.contains(&key.method))
            && (self.label_modes.is_empty() || self.label_modes.contains(&key.label_mode))
            && (self.seeds.is_empty() || self.seeds.contains(&key.seed))
    }
}

impl FromStr for RunFilter {
    type Err = Error;

    /// `method=b2,label=soft,seed=42`; keys may repeat.
    fn from_str(s: &str) -> Result<Self> {
        let mut f = RunFilter::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad filter term `{part}`")))?;
            match k.trim() {
                "method" => f.methods.push(v.trim().parse()?),
                "label" | "label_mode" => f.label_modes.push(v.trim().parse()?),
                "seed" => f.seeds.push(
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad seed `{v}`")))?,
                ),
                other => return Err(Error::Config(format!("unknown filter key `{other}`"))),
            }
        }
        Ok(f)
    }
}

pub struct RunName<'a>(pub &'a RunKey);

impl fmt::Display for RunName<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}-{}",
            self.0.method,
            self.0.label_mode.as_str(),
            self.0.seed
        )
    }
}

pub fn run_dir(out: &Path, key: &RunKey) -> PathBuf {
    out.join("runs").join(RunName(key).to_string())
}

/// Every run of the grid in (method, label mode, seed) order.
pub fn grid_keys(config: &ExperimentConfig) -> Vec<RunKey> {
    let mut keys = Vec::new();
    for &method in &config.grid.methods {
        for &label_mode in &config.grid.label_modes {
            for &seed in &config.grid.seeds {
                keys.push(RunKey {
                    method,
                    label_mode,
                    seed,
                });
            }
        }
    }
    keys.sort_by_key(|k| (k.method, k.label_mode, k.seed));
    keys.dedup();
    keys
}

/// Seed of one purpose within one run.
pub fn run_seed(key: &RunKey, purpose: &str) -> u64 {
    rng::derive_seed(
        key.seed,
        &[key.method.as_str(), key.label_mode.as_str(), purpose],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureOutcome {
    pub fit: TemperatureFit,
    /// Split the fitted temperature was applied to.
    pub split: Split,
    pub before: MetricReport,
    pub after: MetricReport,
    pub rank_stability: RankStability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub key: RunKey,
    pub config_hash: String,
    pub reports: Vec<MetricReport>,
    pub temperature: Option<TemperatureOutcome>,
}

impl RunOutput {
    pub fn report(&self, split: Split) -> Option<&MetricReport> {
        self.reports.iter().find(|r| r.split == split)
    }
}

/// Shared, read-only inputs of every run.
pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub data: &'a LoadedData,
    pub config_hash: String,
}

/// Predictions for one split, keeping member logits.
pub fn predict_split(
    samples: &PosteriorSamples,
    dataset: &Dataset,
    key: &RunKey,
    split: Split,
) -> Result<Vec<PredictiveRecord>> {
    let idx = dataset.split_indices(split);
    let mut prng = rng::from_seed(run_seed(key, &format!("predict-{}", split.as_str())));
    Ok(predict(
        samples,
        dataset,
        &idx,
        &mut prng,
        PredictOptions {
            retain_members: true,
            temperature: 1.0,
        },
    )?)
}

/// Fit on validation records and apply to `target` records.
pub fn temperature_pass(
    ctx: &RunContext<'_>,
    key: &RunKey,
    validation: &[PredictiveRecord],
    target: &[PredictiveRecord],
    target_split: Split,
) -> Result<TemperatureOutcome> {
    let ds = &ctx.data.dataset;
    let labels: Vec<usize> = validation
        .iter()
        .map(|r| ds.example(r.example).hard_label)
        .collect();
    let fit = fit_temperature(
        validation,
        &labels,
        ds.n_categories(),
        (key.method, key.label_mode, key.seed),
        ctx.config.calibration,
    )?;
    let after_records = apply_temperature(target, fit.t_opt, ds.n_categories())?;
    let rates = ds.disagreement_rates();
    let before = evaluate(target, ds, target_split, *key, &rates, ctx.config.metrics)?;
    let after = evaluate(
        &after_records,
        ds,
        target_split,
        *key,
        &rates,
        ctx.config.metrics,
    )?;
    Ok(TemperatureOutcome {
        fit,
        split: target_split,
        before,
        after,
        rank_stability: rank_stability(target, &after_records),
    })
}

/// Score and persist predictions of a trained posterior.
pub fn score_posterior(
    ctx: &RunContext<'_>,
    key: &RunKey,
    samples: &PosteriorSamples,
    dir: &Path,
) -> Result<RunOutput> {
    let ds = &ctx.data.dataset;
    let rates = ds.disagreement_rates();
    let mut reports = Vec::new();
    let mut by_split = Vec::new();
    for &split in &ctx.config.grid.splits {
        let records = predict_split(samples, ds, key, split)?;
        if records.is_empty() {
            log::warn!(
                "{}: {} split is empty, skipped",
                RunName(key),
                split.as_str()
            );
            continue;
        }
        let report = evaluate(&records, ds, split, *key, &rates, ctx.config.metrics)?;
        let correct: Vec<bool> = records
            .iter()
            .map(|r| r.predicted() == ds.example(r.example).hard_label)
            .collect();
        let scores: Vec<f64> = records.iter().map(|r| r.h_tot).collect();
        let s = split.as_str();
        io::write_records(&dir.join(format!("records_{s}.jsonl")), &records)?;
        io::write_json(&dir.join(format!("metrics_{s}.json")), &report)?;
        io::write_risk_coverage(
            &dir.join(format!("risk_coverage_{s}.csv")),
            &risk_coverage(&scores, &correct)?,
        )?;
        io::write_reliability(
            &dir.join(format!("reliability_{s}.csv")),
            &report.reliability,
        )?;
        reports.push(report);
        by_split.push((split, records));
    }
    let find = |s: Split| {
        by_split
            .iter()
            .find(|(sp, _)| *sp == s)
            .map(|(_, r)| r.as_slice())
    };
    let temperature = match find(Split::Validation) {
        Some(val) => {
            let (target_split, target) = match find(Split::Test) {
                Some(test) => (Split::Test, test),
                None => (Split::Validation, val),
            };
            let outcome = temperature_pass(ctx, key, val, target, target_split)?;
            io::write_json(&dir.join("temperature.json"), &outcome)?;
            Some(outcome)
        }
        None => None,
    };
    let out = RunOutput {
        key: *key,
        config_hash: ctx.config_hash.clone(),
        reports,
        temperature,
    };
    io::write_json(&dir.join("run.json"), &out)?;
    Ok(out)
}

/// Train, predict, score and persist one run.
pub fn execute_run(ctx: &RunContext<'_>, key: &RunKey, out: &Path) -> Result<RunOutput> {
    let dir = run_dir(out, key);
    let start = Instant::now();
    let set = TrainingSet::from_splits(&ctx.data.dataset, key.label_mode);
    let samples = train(
        key.method,
        &set,
        &ctx.config.trainer,
        run_seed(key, "train"),
    )?;
    io::write_posterior(&dir.join("posterior"), &samples, &ctx.config_hash)?;
    let output = score_posterior(ctx, key, &samples, &dir)?;
    write_timing(&dir, start.elapsed().as_secs_f64())?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub run: String,
    pub wall_clock_secs: f64,
}

fn write_timing(dir: &Path, secs: f64) -> Result<()> {
    io::write_json(
        &dir.join("timing.json"),
        &Timing {
            wall_clock_secs: secs,
        },
    )
}

/// Load a finished run whose config hash matches.
pub fn load_run(out: &Path, key: &RunKey, config_hash: &str) -> Option<RunOutput> {
    let path = run_dir(out, key).join("run.json");
    let run: RunOutput = io::read_json(&path).ok()?;
    (run.config_hash == config_hash && run.key == *key).then_some(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub method: Method,
    pub label_mode: LabelMode,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub dir: String,
}

/// Index of a grid's outputs. Wall-clock timings live next to each run in
/// `timing.json` so that the bundle itself is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReportBundle {
    pub version: String,
    pub config_hash: String,
    pub partial: bool,
    pub runs: Vec<RunEntry>,
    pub reports: Vec<MetricReport>,
    pub temperature: Vec<TemperatureOutcome>,
    pub stats: Option<GridStats>,
}

pub fn build_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Run the grid (restricted to `filter`), then rebuild the bundle from all
/// configured runs whose outputs are present.
pub fn run_grid(
    config: &ExperimentConfig,
    data: &LoadedData,
    out: &Path,
    filter: &RunFilter,
) -> Result<RunReportBundle> {
    let ctx = RunContext {
        config,
        data,
        config_hash: config.hash(&data.digest)?,
    };
    let keys = grid_keys(config);
    let selected: Vec<RunKey> = keys.iter().copied().filter(|k| filter.matches(k)).collect();
    let pool = build_pool(config.jobs)?;
    let results: Vec<(RunKey, Result<RunOutput>)> = pool.install(|| {
        selected
            .par_iter()
            .map(|k| {
                log::info!("run {}", RunName(k));
                let r = execute_run(&ctx, k, out);
                if let Err(e) = &r {
                    log::error!("run {} failed: {e}", RunName(k));
                }
                (*k, r)
            })
            .collect()
    });
    let fresh: Vec<(RunKey, std::result::Result<RunOutput, String>)> = results
        .into_iter()
        .map(|(k, r)| (k, r.map_err(|e| e.to_string())))
        .collect();
    let bundle = assemble_bundle(&ctx, &keys, fresh, out)?;
    io::write_json(&out.join("bundle.json"), &bundle)?;
    let timing: Vec<TimingRecord> = keys
        .iter()
        .filter_map(|k| {
            let t: Timing = io::read_json(&run_dir(out, k).join("timing.json")).ok()?;
            Some(TimingRecord {
                run: RunName(k).to_string(),
                wall_clock_secs: t.wall_clock_secs,
            })
        })
        .collect();
    io::write_json(&out.join("timing.json"), &timing)?;
    if let Some(stats) = &bundle.stats {
        io::write_json(&out.join("stats.json"), stats)?;
        io::write_text(&out.join("stats.txt"), &stats.summary())?;
    }
    Ok(bundle)
}

/// Combine fresh results with finished runs already on disk.
pub fn assemble_bundle(
    ctx: &RunContext<'_>,
    keys: &[RunKey],
    fresh: Vec<(RunKey, std::result::Result<RunOutput, String>)>,
    out: &Path,
) -> Result<RunReportBundle> {
    let mut runs = Vec::new();
    let mut outputs = Vec::new();
    for key in keys {
        let (status, error, output) = match fresh.iter().find(|(k, _)| k == key) {
            Some((_, Ok(o))) => (RunStatus::Ok, None, Some(o.clone())),
            Some((_, Err(e))) => (RunStatus::Failed, Some(e.clone()), None),
            None => match load_run(out, key, &ctx.config_hash) {
                Some(o) => (RunStatus::Ok, None, Some(o)),
                None => (RunStatus::Missing, None, None),
            },
        };
        let dir = format!("runs/{}", RunName(key));
        runs.push(RunEntry {
            method: key.method,
            label_mode: key.label_mode,
            seed: key.seed,
            status,
            error,
            dir,
        });
        outputs.extend(output);
    }
    let partial = runs.iter().any(|r| r.status != RunStatus::Ok);
    let stats = if outputs.is_empty() {
        None
    } else {
        Some(grid_stats(&outputs, &ctx.config.stats))
    };
    Ok(RunReportBundle {
        version: VERSION.to_string(),
        config_hash: ctx.config_hash.clone(),
        partial,
        runs,
        reports: outputs
            .iter()
            .flat_map(|o| o.reports.iter().cloned())
            .collect(),
        temperature: outputs
            .iter()
            .filter_map(|o| o.temperature.clone())
            .collect(),
        stats,
    })
}

/// Refit temperatures for finished runs from their saved posteriors.
pub fn recalibrate(
    config: &ExperimentConfig,
    data: &LoadedData,
    out: &Path,
    filter: &RunFilter,
) -> Result<Vec<RunKey>> {
    let ctx = RunContext {
        config,
        data,
        config_hash: config.hash(&data.digest)?,
    };
    let mut done = Vec::new();
    for key in grid_keys(config).into_iter().filter(|k| filter.matches(k)) {
        let dir = run_dir(out, &key);
        let Ok((samples, manifest)) = io::read_posterior(&dir.join("posterior")) else {
            log::warn!("{}: no saved posterior, skipped", RunName(&key));
            continue;
        };
        if manifest.config_hash != ctx.config_hash {
            log::warn!(
                "{}: posterior was trained under another config, skipped",
                RunName(&key)
            );
            continue;
        }
        let ds = &data.dataset;
        let val = predict_split(&samples, ds, &key, Split::Validation)?;
        let (split, target) = if config.grid.splits.contains(&Split::Test) {
            (Split::Test, predict_split(&samples, ds, &key, Split::Test)?)
        } else {
            (Split::Validation, val.clone())
        };
        let outcome = temperature_pass(&ctx, &key, &val, &target, split)?;
        io::write_json(&dir.join("temperature.json"), &outcome)?;
        done.push(key);
    }
    Ok(done)
}

/// Rebuild the bundle and statistics from runs already on disk.
pub fn restats(
    config: &ExperimentConfig,
    data: &LoadedData,
    out: &Path,
) -> Result<RunReportBundle> {
    let ctx = RunContext {
        config,
        data,
        config_hash: config.hash(&data.digest)?,
    };
    let bundle = assemble_bundle(&ctx, &grid_keys(config), Vec::new(), out)?;
    io::write_json(&out.join("bundle.json"), &bundle)?;
    if let Some(stats) = &bundle.stats {
        io::write_json(&out.join("stats.json"), stats)?;
        io::write_text(&out.join("stats.txt"), &stats.summary())?;
    }
    Ok(bundle)
}
