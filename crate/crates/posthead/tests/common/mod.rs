#![allow(dead_code)]

use std::path::Path;

use posthead::config::SyntheticSource;
use posthead::ExperimentConfig;
use posthead_core::synthetic::SyntheticConfig;
use posthead_core::trainers::SamplerConfig;

/// A synthetic grid small enough to run in a test.
pub fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.data.synthetic = Some(SyntheticSource {
        seed: 3,
        corpus: SyntheticConfig {
            n_examples: 400,
            dim: 6,
            initial_raters: 5,
            extra_raters: 2,
            ..SyntheticConfig::default()
        },
    });
    cfg.trainer.sampler = SamplerConfig {
        n_cycles: 3,
        cycle_len: 60,
        burn_in: 1,
        samples_per_cycle: 3,
        ..SamplerConfig::default()
    };
    cfg.trainer.optimizer.max_epochs = 3;
    cfg.metrics.n_boot = 100;
    cfg.stats.n_boot = 100;
    cfg.grid.seeds = vec![1, 2, 3];
    cfg.jobs = 1;
    cfg
}

/// Every file below `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path, keep: &dyn Fn(&str) -> bool) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                if keep(&rel) {
                    out.push((rel, std::fs::read(&p).unwrap()));
                }
            }
        }
    }
    out.sort();
    out
}

/// Files that legitimately differ between runs.
pub fn not_timing(rel: &str) -> bool {
    !rel.ends_with("timing.json")
}
