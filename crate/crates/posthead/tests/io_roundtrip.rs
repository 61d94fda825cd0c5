//! On-disk formats read back what was written.

use posthead::io;
use posthead::Error;
use posthead_core::model::HeadWeights;
use posthead_core::synthetic::{generate, SyntheticConfig};
use posthead_core::trainers::{train, TrainerConfig, TrainingSet};
use posthead_core::uncertainty::{predict, PredictOptions};
use posthead_core::{rng, FeatureMatrix, LabelMode, Method, Split};

fn corpus() -> posthead_core::Dataset {
    generate(
        &SyntheticConfig {
            n_examples: 120,
            dim: 5,
            ..SyntheticConfig::default()
        },
        1,
    )
    .unwrap()
    .dataset
}

#[test]
fn features_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.phfm");
    let m =
        FeatureMatrix::new(3, 2, vec![0.5, -1.25, f32::MIN_POSITIVE, 3.0e8, -0.0, 7.0]).unwrap();
    io::write_features(&path, &m).unwrap();
    assert_eq!(io::read_features(&path).unwrap(), m);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], io::FEATURE_MAGIC);
    assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 6 * 4);
}

#[test]
fn truncated_features_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.phfm");
    let m = FeatureMatrix::new(2, 2, vec![1.0; 4]).unwrap();
    io::write_features(&path, &m).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    let err = io::read_features(&path).unwrap_err();
    assert!(matches!(err, Error::Format { .. }) && err.is_input_error());
}

#[test]
fn dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = corpus();
    let (f, e, c) = (
        dir.path().join("f.phfm"),
        dir.path().join("e.jsonl"),
        dir.path().join("c.json"),
    );
    io::write_dataset(&ds, &f, &e, &c).unwrap();
    let back = io::load_dataset(&f, &e, Some(&c)).unwrap();
    assert_eq!(back.examples(), ds.examples());
    assert_eq!(back.features(), ds.features());
    assert_eq!(back.category_names(), ds.category_names());
}

#[test]
fn bad_example_line_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    std::fs::write(&path, "{\"id\":\"a\",\"split\":\"train\",\"votes\":[0]}\n{\"id\":\"b\",\"split\":\"nope\",\"votes\":[1]}\n")
        .unwrap();
    match io::read_examples(&path) {
        Err(Error::Record { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn weights_and_posteriors_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng::from_seed(2);
    let w = HeadWeights::gaussian(3, 7, 0.5, &mut r);
    let path = dir.path().join("w.phw");
    io::write_weights(&path, &w).unwrap();
    assert_eq!(io::read_weights(&path).unwrap(), w);
    assert_eq!(&std::fs::read(&path).unwrap()[..4], io::WEIGHTS_MAGIC);

    let ds = corpus();
    let mut cfg = TrainerConfig::default();
    cfg.optimizer.max_epochs = 2;
    let set = TrainingSet::from_splits(&ds, LabelMode::Soft);
    for method in [Method::McDropout, Method::DeepEnsemble] {
        let post = train(method, &set, &cfg, 5).unwrap();
        let pdir = dir.path().join(method.as_str());
        io::write_posterior(&pdir, &post, "abc").unwrap();
        let (back, manifest) = io::read_posterior(&pdir).unwrap();
        assert_eq!(back, post);
        assert_eq!(manifest.config_hash, "abc");
    }
}

#[test]
fn records_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let ds = corpus();
    let mut cfg = TrainerConfig::default();
    cfg.optimizer.max_epochs = 2;
    let set = TrainingSet::from_splits(&ds, LabelMode::Hard);
    let post = train(Method::DeepEnsemble, &set, &cfg, 5).unwrap();
    let idx = ds.split_indices(Split::Validation);
    let recs = predict(
        &post,
        &ds,
        &idx,
        &mut rng::from_seed(0),
        PredictOptions::default(),
    )
    .unwrap();
    let path = dir.path().join("r.jsonl");
    io::write_records(&path, &recs).unwrap();
    assert_eq!(io::read_records(&path, &ds).unwrap(), recs);
}
