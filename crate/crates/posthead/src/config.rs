//! Experiment configuration.
//!
//! One TOML file drives every verb. Every omitted value takes the
//! canonical default, so an empty `[trainer]` table reproduces the main
//! protocol. Relative paths are resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use posthead_core::active::{scaled_sampler, Strategy};
use posthead_core::calibrate::TemperatureSearch;
use posthead_core::data::RaterSubset;
use posthead_core::metrics::MetricSettings;
use posthead_core::synthetic::{self, SyntheticConfig};
use posthead_core::trainers::{SamplerConfig, TrainerConfig};
use posthead_core::{Dataset, LabelMode, Method, Split};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSource {
    pub seed: u64,
    pub corpus: SyntheticConfig,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        Self {
            seed: 0,
            corpus: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub features: Option<PathBuf>,
    pub examples: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    /// Generate a corpus instead of reading files.
    pub synthetic: Option<SyntheticSource>,
    /// Annotators entering the per-category disagreement rate.
    pub raters: RaterSubset,
    /// Report deviations from the canonical corpus shape as errors.
    pub canonical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub methods: Vec<Method>,
    pub label_modes: Vec<LabelMode>,
    pub seeds: Vec<u64>,
    /// Splits predicted and scored for every run.
    pub splits: Vec<Split>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            label_modes: LabelMode::ALL.to_vec(),
            seeds: vec![42, 43, 44],
            splits: vec![Split::Validation, Split::Test],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub alpha: f64,
    pub n_boot: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            n_boot: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActiveConfig {
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub n_iterations: usize,
    pub batch_per_iter: usize,
    pub initial_size: usize,
    pub label_mode: LabelMode,
    pub sampler: SamplerConfig,
    /// Category names or indices removed before the loop.
    pub exclude_categories: Vec<String>,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        Self {
            strategies: Strategy::ALL.to_vec(),
            seeds: vec![42, 43, 44],
            n_iterations: 20,
            batch_per_iter: 500,
            initial_size: 500,
            label_mode: LabelMode::Soft,
            sampler: scaled_sampler(),
            exclude_categories: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub label_mode: LabelMode,
    pub seeds: Vec<u64>,
    pub n_cycles: Vec<usize>,
    pub temperature: Vec<f64>,
    pub samples_per_cycle: Vec<usize>,
    /// Extra S levels reported alongside the main S axis.
    pub supplementary_samples_per_cycle: Vec<usize>,
    pub split: Split,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            label_mode: LabelMode::Soft,
            seeds: vec![42, 43, 44],
            n_cycles: vec![4, 8, 12],
            temperature: vec![0.5, 1.0, 1.5],
            samples_per_cycle: vec![3, 10, 20],
            supplementary_samples_per_cycle: vec![30],
            split: Split::Validation,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub grid: GridConfig,
    pub trainer: TrainerConfig,
    pub metrics: MetricSettings,
    pub calibration: TemperatureSearch,
    pub stats: StatsConfig,
    pub active: ActiveConfig,
    pub ablation: AblationConfig,
    pub output: Option<PathBuf>,
    /// Worker threads; zero means one per core.
    pub jobs: usize,
}

/// A loaded dataset with its provenance.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Generative annotator distribution per example, synthetic data only.
    pub generative: Option<Vec<Vec<f64>>>,
    /// SHA-256 over the input files (or the synthetic settings).
    pub digest: String,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.data.features);
        fix(&mut self.data.examples);
        fix(&mut self.data.categories);
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.grid.seeds.is_empty()
            || self.grid.methods.is_empty()
            || self.grid.label_modes.is_empty()
        {
            return bad("grid methods, label modes and seeds must be nonempty");
        }
        if self.grid.splits.is_empty() {
            return bad("grid splits must be nonempty");
        }
        let ab = &self.ablation;
        if ab.seeds.is_empty()
            || ab.n_cycles.is_empty()
            || ab.temperature.is_empty()
            || ab.samples_per_cycle.is_empty()
        {
            return bad("every ablation axis and the ablation seeds must be nonempty");
        }
        if self.active.strategies.is_empty() || self.active.seeds.is_empty() {
            return bad("active-learning strategies and seeds must be nonempty");
        }
        if !(self.stats.alpha > 0.0 && self.stats.alpha < 1.0) || self.stats.n_boot == 0 {
            return bad("stats alpha must lie in (0, 1) and n_boot must be positive");
        }
        if self.metrics.n_bins == 0 {
            return bad("metrics need at least one bin");
        }
        let files = [&self.data.features, &self.data.examples];
        match (&self.data.synthetic, files.iter().all(|f| f.is_some())) {
            (Some(_), false) | (None, true) => {}
            (Some(_), true) => {
                return bad("data: give either synthetic settings or input files, not both")
            }
            (None, false) => return bad("data: features and examples paths are required"),
        }
        self.trainer.validate()?;
        Ok(())
    }

    pub fn load_data(&self) -> Result<LoadedData> {
        let loaded = if let Some(src) = &self.data.synthetic {
            let corpus = synthetic::generate(&src.corpus, src.seed)?;
            let digest = sha256_hex(serde_json::to_string(src)?.as_bytes());
            LoadedData {
                dataset: corpus.dataset,
                generative: Some(corpus.generative),
                digest,
            }
        } else {
            let features = self.data.features.as_deref().expect("validated");
            let examples = self.data.examples.as_deref().expect("validated");
            let categories = self.data.categories.as_deref();
            let dataset = io::load_dataset(features, examples, categories)?;
            let mut hasher = Sha256::new();
            for p in [Some(features), Some(examples), categories]
                .into_iter()
                .flatten()
            {
                hasher.update(fs::read(p).map_err(|e| Error::io(p, e))?);
            }
            LoadedData {
                dataset,
                generative: None,
                digest: hex::encode(hasher.finalize()),
            }
        };
        let dataset = loaded.dataset.with_rater_subset(self.data.raters);
        if self.data.canonical {
            let issues = dataset.canonical_check();
            if !issues.is_empty() {
                return Err(Error::Config(format!(
                    "dataset is not the canonical corpus: {}",
                    issues.join("; ")
                )));
            }
        }
        Ok(LoadedData { dataset, ..loaded })
    }

    /// Hash over every setting that affects results, together with the
    /// input data digest. Output location and worker count are excluded.
    pub fn hash(&self, data_digest: &str) -> Result<String> {
        #[derive(Serialize)]
        struct Hashed<'a> {
            config: &'a ExperimentConfig,
            data: &'a str,
        }
        let mut cfg = self.clone();
        cfg.output = None;
        cfg.jobs = 0;
        cfg.data.features = None;
        cfg.data.examples = None;
        cfg.data.categories = None;
        let text = serde_json::to_string(&Hashed {
            config: &cfg,
            data: data_digest,
        })?;
        Ok(sha256_hex(text.as_bytes()))
    }

    /// Category indices named in the active-learning exclusion list.
    pub fn excluded_categories(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        self.active
            .exclude_categories
            .iter()
            .map(|name| {
                dataset
                    .category_names()
                    .iter()
                    .position(|n| n == name)
                    .or_else(|| name.parse().ok().filter(|&i| i < dataset.n_categories()))
                    .ok_or_else(|| {
                        Error::Config(format!("unknown category `{name}` in exclusion list"))
                    })
            })
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_canonical_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.grid.seeds, vec![42, 43, 44]);
        assert_eq!(cfg.trainer.sampler.n_cycles, 8);
        assert_eq!(cfg.trainer.sampler.cycle_len, 2500);
        assert_eq!(cfg.trainer.optimizer.patience, 3);
        assert_eq!(cfg.ablation.n_cycles, vec![4, 8, 12]);
        assert_eq!(cfg.active.sampler.cycle_len, 500);
        assert_eq!(cfg.metrics.n_bins, 15);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("[grid]\nseedz = [1]\n").is_err());
    }

    #[test]
    fn empty_seed_list_rejected() {
        let mut cfg = ExperimentConfig::from_toml("[grid]\nseeds = []\n").unwrap();
        cfg.data.synthetic = Some(SyntheticSource::default());
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_output_and_jobs() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            output: Some("x".into()),
            jobs: 7,
            ..ExperimentConfig::default()
        };
        assert_eq!(a.hash("d").unwrap(), b.hash("d").unwrap());
        let mut c = a.clone();
        c.trainer.sampler.alpha0 = 2e-4;
        assert_ne!(a.hash("d").unwrap(), c.hash("d").unwrap());
        assert_ne!(a.hash("d").unwrap(), a.hash("e").unwrap());
    }
}
