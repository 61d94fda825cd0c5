//! Grid orchestration, partial reruns and the command line.

mod common;

use std::process::Command;

use common::{not_timing, small_config, snapshot};
use posthead::ablation::{run_ablation, Axis};
use posthead::runner::{grid_keys, run_grid, RunFilter, RunStatus};
use posthead::subset::subset_diagnostic_with;
use posthead::ExperimentConfig;
use posthead_core::data::SubsetFilter;
use posthead_core::{LabelMode, Method, Split};

#[test]
fn canonical_grid_has_24_runs_and_single_method_grids_shrink() {
    let cfg = ExperimentConfig::default();
    assert_eq!(grid_keys(&cfg).len(), 24);
    let mut one = cfg.clone();
    one.grid.methods = vec![Method::DeepEnsemble];
    assert_eq!(grid_keys(&one).len(), 6);
}

#[test]
fn filters_parse() {
    let f: RunFilter = "method=proposed,label=soft,seed=42,seed=43"
        .parse()
        .unwrap();
    assert_eq!(f.methods, vec![Method::CyclicalSgmcmc]);
    assert_eq!(f.label_modes, vec![LabelMode::Soft]);
    assert_eq!(f.seeds, vec![42, 43]);
    assert!("colour=red".parse::<RunFilter>().is_err());
    assert!("seed".parse::<RunFilter>().is_err());
}

#[test]
fn reruns_are_byte_identical_and_parallel_equals_serial() {
    let cfg = small_config();
    let data = cfg.load_data().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let bundle = run_grid(&cfg, &data, a.path(), &RunFilter::default()).unwrap();
    assert!(!bundle.partial);
    assert_eq!(bundle.runs.len(), 24);
    assert_eq!(bundle.temperature.len(), 24);
    assert_eq!(bundle.reports.len(), 48);
    run_grid(&cfg, &data, b.path(), &RunFilter::default()).unwrap();
    let mut par = cfg.clone();
    par.jobs = 4;
    run_grid(&par, &data, c.path(), &RunFilter::default()).unwrap();
    let sa = snapshot(a.path(), &not_timing);
    assert!(sa
        .iter()
        .any(|(p, _)| p.ends_with("metrics_validation.json")));
    assert_eq!(sa, snapshot(b.path(), &not_timing));
    assert_eq!(sa, snapshot(c.path(), &not_timing));
}

#[test]
fn partial_runs_complete_into_the_full_grid() {
    let mut cfg = small_config();
    cfg.grid.methods = vec![Method::Deterministic, Method::CyclicalSgmcmc];
    cfg.grid.seeds = vec![1, 2];
    let data = cfg.load_data().unwrap();
    let full = tempfile::tempdir().unwrap();
    let parts = tempfile::tempdir().unwrap();
    run_grid(&cfg, &data, full.path(), &RunFilter::default()).unwrap();

    let first = run_grid(&cfg, &data, parts.path(), &"method=b0".parse().unwrap()).unwrap();
    assert!(first.partial);
    let missing = first
        .runs
        .iter()
        .filter(|r| r.status == RunStatus::Missing)
        .count();
    assert_eq!(missing, 4);
    let second = run_grid(
        &cfg,
        &data,
        parts.path(),
        &"method=proposed".parse().unwrap(),
    )
    .unwrap();
    assert!(!second.partial);
    assert_eq!(
        snapshot(full.path(), &not_timing),
        snapshot(parts.path(), &not_timing)
    );

    // Runs from another configuration are not reused.
    let mut changed = cfg.clone();
    changed.trainer.optimizer.learning_rate = 2e-3;
    let third = run_grid(
        &changed,
        &data,
        parts.path(),
        &"method=proposed".parse().unwrap(),
    )
    .unwrap();
    assert!(third
        .runs
        .iter()
        .filter(|r| r.method == Method::Deterministic)
        .all(|r| r.status == RunStatus::Missing));
}

#[test]
fn noise_free_ablation_does_not_depend_on_temperature() {
    let mut cfg = small_config();
    cfg.trainer.sampler.noise = false;
    cfg.ablation.seeds = vec![1, 2];
    cfg.ablation.n_cycles = vec![3];
    cfg.ablation.temperature = vec![0.5, 1.0, 1.5];
    cfg.ablation.samples_per_cycle = vec![3];
    cfg.ablation.supplementary_samples_per_cycle = vec![];
    let data = cfg.load_data().unwrap();
    let out = tempfile::tempdir().unwrap();
    let report = run_ablation(&cfg, &data, out.path()).unwrap();
    let t = report
        .axes
        .iter()
        .find(|a| a.axis == Axis::Temperature)
        .unwrap();
    assert_eq!(t.level_means[0], t.level_means[1]);
    assert_eq!(t.level_means[1], t.level_means[2]);
    // One-level axes report their entropies but no statistics.
    let n = report
        .axes
        .iter()
        .find(|a| a.axis == Axis::NCycles)
        .unwrap();
    assert_eq!(n.cells.len(), 2);
    assert!(n.anova.is_none() && n.pairwise.is_empty());
    assert!(out.path().join("ablation/ablation.json").exists());
}

#[test]
fn full_split_subset_reproduces_the_main_divergences() {
    let mut cfg = small_config();
    cfg.grid.methods = vec![Method::DeepEnsemble, Method::CyclicalSgmcmc];
    let data = cfg.load_data().unwrap();
    let out = tempfile::tempdir().unwrap();
    let bundle = run_grid(&cfg, &data, out.path(), &RunFilter::default()).unwrap();
    let diag = subset_diagnostic_with(
        &cfg,
        &data,
        out.path(),
        SubsetFilter::split(Split::Validation),
    )
    .unwrap();
    assert_eq!(diag.rows.len(), 12);
    for row in &diag.rows {
        let r = bundle
            .reports
            .iter()
            .find(|r| {
                r.split == Split::Validation
                    && r.method == row.method
                    && r.label_mode == row.label_mode
                    && r.seed == row.seed
            })
            .unwrap();
        assert_eq!(row.jsd_bits, r.jsd_bits);
        assert_eq!(row.kl_nats, r.kl_nats);
    }
    assert_eq!(diag.proposed_vs_b2.len(), 2);

    let ex = data.dataset.split_indices(Split::Validation)[0];
    let one = subset_diagnostic_with(
        &cfg,
        &data,
        out.path(),
        SubsetFilter {
            category: Some(data.dataset.example(ex).hard_label),
            ..SubsetFilter::split(Split::Validation)
        },
    )
    .unwrap();
    assert!(one.rows.iter().all(|r| r.n_examples >= 1));
}

fn write_config(dir: &std::path::Path, cfg: &ExperimentConfig) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, toml::to_string(cfg).unwrap()).unwrap();
    path
}

fn posthead(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_posthead"))
        .args(args)
        .env("RUST_LOG", "off")
        .status()
        .unwrap()
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.grid.methods = vec![Method::Deterministic];
    cfg.grid.seeds = vec![1, 2];
    let path = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");
    let (p, o) = (path.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(
        posthead(&["run-grid", "-c", p, "-o", o, "--only", "seed=1"]),
        1
    );
    assert_eq!(
        posthead(&["run-grid", "-c", p, "-o", o, "--only", "seed=2"]),
        0
    );
    assert_eq!(posthead(&["stats", "-c", p, "-o", o]), 0);
    assert_eq!(posthead(&["report", "-o", o]), 0);
    assert!(out.join("grid.csv").exists() && out.join("summary.csv").exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\nseeds = []\n").unwrap();
    assert_eq!(
        posthead(&["run-grid", "-c", bad.to_str().unwrap(), "-o", o]),
        2
    );
    std::fs::write(&bad, "[grid]\nnot_a_key = 1\n").unwrap();
    assert_eq!(
        posthead(&["run-grid", "-c", bad.to_str().unwrap(), "-o", o]),
        2
    );
    assert_eq!(
        posthead(&[
            "run-grid",
            "-c",
            dir.path().join("absent.toml").to_str().unwrap()
        ]),
        2
    );
}
