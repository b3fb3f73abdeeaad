//! File formats shared with external tooling: config JSON, weight files and
//! manifests.

mod common;

use kws_core::arch::{reference_config, LayerSpec, ModelConfig, ZOO};
use kws_core::eval::{Label, Manifest};
use kws_core::io::{decode_container, load_model, load_weights, save_weights, MAGIC};
use kws_core::model::{expected_tensors, Model, WeightSet};
use kws_core::{Error, WeightFileError};
use rand::SeedableRng;

#[test]
fn zoo_configs_round_trip_through_json_files() {
    let dir = tempfile::tempdir().unwrap();
    for b in ZOO {
        let cfg = reference_config(b.name).unwrap();
        let path = dir.path().join(format!("{}.json", b.name));
        std::fs::write(&path, cfg.to_json()).unwrap();
        assert_eq!(ModelConfig::load(&path).unwrap(), cfg);
    }
}

#[test]
fn config_schema_is_tagged_by_kind() {
    let text = r#"{
        "schema_version": 1,
        "name": "hand-written",
        "input": {"frames": 12, "bins": 6},
        "layers": [
            {"kind": "delta"},
            {"kind": "conv", "kernel": [3, 2], "stride": [2, 1], "channels": 2, "activation": "relu"},
            {"kind": "batchnorm", "eps": 0.001},
            {"kind": "flatten"},
            {"kind": "gru", "hidden": 3},
            {"kind": "attention", "scale": "dk"},
            {"kind": "sum_over_time"},
            {"kind": "dense", "units": 1, "activation": "sigmoid"}
        ]
    }"#;
    let cfg = ModelConfig::from_json(text).unwrap();
    assert_eq!(cfg.layers[0], LayerSpec::Delta);
    assert!(cfg.has_delta() && cfg.is_recurrent());
    let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
    assert!(matches!(ModelConfig::from_json(&bumped), Err(Error::Config(_))));
    let unknown = text.replace("\"sum_over_time\"", "\"mean_over_time\"");
    assert!(ModelConfig::from_json(&unknown).is_err());
}

#[test]
fn weight_files_carry_config_and_named_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_config("CRNN-89k").unwrap();
    let weights = WeightSet::random(&cfg, 3).unwrap();
    let path = dir.path().join("m.kws");
    save_weights(&cfg, &weights, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes[..4], MAGIC);
    let (back_cfg, tensors) = decode_container(&bytes).unwrap();
    assert_eq!(back_cfg, cfg);
    let names: Vec<String> = tensors.iter().map(|t| t.name.clone()).collect();
    let expect: Vec<String> = expected_tensors(&cfg).unwrap().into_iter().map(|(_, n, _)| n).collect();
    assert_eq!(names, expect);
    let (_, w2) = load_weights(&path).unwrap();
    assert_eq!(w2, weights);
    let model = load_model(&path).unwrap();
    let direct = Model::new(cfg, weights).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let audio = common::random_audio(&mut rng, 150);
    let a = common::offline(&model, &audio);
    let b = common::offline(&direct, &audio);
    assert_eq!(a, b);
}

#[test]
fn missing_files_and_wrong_magic_are_typed() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_model(dir.path().join("absent.kws")), Err(Error::Path { .. })));
    let path = dir.path().join("bad.kws");
    std::fs::write(&path, b"RIFF\x01\x00\x00\x00\x00\x00\x00\x00").unwrap();
    let err = load_model(&path).unwrap_err();
    assert!(matches!(err, Error::Path { .. }));
    assert!(matches!(err.root(), Error::WeightFile(WeightFileError::BadMagic(_))), "{err}");
}

#[test]
fn manifests_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.wav", "b.wav"] {
        std::fs::write(dir.path().join(name), b"").unwrap();
    }
    let text = "{\"path\":\"a.wav\",\"label\":\"positive\",\"start_ms\":120.0,\"end_ms\":610.5}\n\n{\"path\":\"b.wav\",\"label\":\"negative\"}\n";
    let m = Manifest::parse(text, dir.path()).unwrap();
    assert_eq!(m.entries.len(), 2);
    assert_eq!(m.entries[0].label, Label::Positive);
    assert_eq!(m.entries[0].reference().unwrap().end_ms, 610.5);
    assert!(m.entries[1].reference().is_none());
    let path = dir.path().join("m.jsonl");
    std::fs::write(&path, m.to_jsonl()).unwrap();
    assert_eq!(Manifest::load(&path).unwrap(), m);

    let bad = "{\"path\":\"a.wav\",\"label\":\"positive\"}\n{\"path\":\"a.wav\",\"label\":\"maybe\"}\n";
    assert!(matches!(Manifest::parse(bad, dir.path()), Err(Error::Manifest { line: 2, .. })));
}
