//! Generators shared by the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use kws_core::arch::{receptive_field, LayerSpec, ModelConfig};
use kws_core::frontend::{compute_lfbe, AudioBuffer, HOP_SAMPLES, WINDOW_SAMPLES};
use kws_core::model::{Model, WindowPosterior};
use kws_core::nncore::{Activation, AttentionScale};
use kws_core::streaming::{StreamEngine, StreamPosterior, Strategy};
use rand::Rng;

pub fn sigmoid_out() -> LayerSpec {
    LayerSpec::Dense { units: 1, activation: Activation::Sigmoid }
}

/// Conv stack with 1 or 2 layers, optional delta and batch norm.
fn random_front(rng: &mut impl Rng, allow_delta: bool) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    if allow_delta && rng.gen_bool(0.3) {
        layers.push(LayerSpec::Delta);
    }
    for _ in 0..rng.gen_range(1..=2) {
        layers.push(LayerSpec::Conv {
            kernel: [rng.gen_range(1..=4), rng.gen_range(1..=3)],
            stride: [rng.gen_range(1..=3), rng.gen_range(1..=2)],
            channels: rng.gen_range(1..=3),
            activation: if rng.gen_bool(0.5) { Activation::Relu } else { Activation::Tanh },
        });
        if rng.gen_bool(0.5) {
            layers.push(LayerSpec::BatchNorm { eps: 1e-3 });
        }
    }
    layers
}

/// Sets the input length so the front end yields exactly `steps`
/// timesteps; `None` if the layers do not fit the input.
fn with_steps(mut cfg: ModelConfig, steps: usize) -> Option<ModelConfig> {
    cfg.input.frames = 4096;
    let rf = receptive_field(&cfg).ok()?;
    cfg.input.frames = rf.rf + (steps - 1) * rf.stride;
    cfg.validate().ok().map(|()| cfg)
}

/// A small CRNN: conv front end, one or two GRUs, then attention or plain
/// pooling and a dense head.
pub fn random_crnn(rng: &mut impl Rng) -> ModelConfig {
    loop {
        if let Some(cfg) = try_crnn(rng) {
            return cfg;
        }
    }
}

fn try_crnn(rng: &mut impl Rng) -> Option<ModelConfig> {
    let mut layers = random_front(rng, true);
    layers.push(LayerSpec::Flatten);
    for _ in 0..rng.gen_range(1..=2) {
        layers.push(LayerSpec::Gru { hidden: rng.gen_range(1..=5) });
    }
    if rng.gen_bool(0.7) {
        let scale = if rng.gen_bool(0.8) { AttentionScale::Dk } else { AttentionScale::SqrtDk };
        layers.push(LayerSpec::Attention { scale });
    }
    layers.push(LayerSpec::SumOverTime);
    if rng.gen_bool(0.5) {
        layers.push(LayerSpec::Dense { units: rng.gen_range(1..=4), activation: Activation::Relu });
    }
    layers.push(sigmoid_out());
    let bins = rng.gen_range(6..=12);
    with_steps(ModelConfig::new("random-crnn", 0, bins, layers), rng.gen_range(2..=6))
}

pub fn random_cnn(rng: &mut impl Rng) -> ModelConfig {
    loop {
        if let Some(cfg) = try_cnn(rng) {
            return cfg;
        }
    }
}

fn try_cnn(rng: &mut impl Rng) -> Option<ModelConfig> {
    let mut layers = random_front(rng, false);
    layers.push(LayerSpec::FlattenAll);
    layers.push(LayerSpec::Dense { units: rng.gen_range(1..=6), activation: Activation::Relu });
    layers.push(sigmoid_out());
    with_steps(ModelConfig::new("random-cnn", 0, rng.gen_range(6..=10), layers), rng.gen_range(1..=4))
}

pub fn random_dnn(rng: &mut impl Rng) -> ModelConfig {
    let mut layers = vec![LayerSpec::FlattenAll];
    for _ in 0..rng.gen_range(0..=2) {
        layers.push(LayerSpec::Dense { units: rng.gen_range(1..=8), activation: Activation::Relu });
    }
    layers.push(sigmoid_out());
    ModelConfig::new("random-dnn", rng.gen_range(1..=8), rng.gen_range(2..=8), layers)
}

pub fn random_config(rng: &mut impl Rng) -> ModelConfig {
    match rng.gen_range(0..4) {
        0 => random_cnn(rng),
        1 => random_dnn(rng),
        _ => random_crnn(rng),
    }
}

/// Noise plus a rising chirp, long enough for `frames` feature frames.
pub fn random_audio(rng: &mut impl Rng, frames: usize) -> Vec<i16> {
    let len = WINDOW_SAMPLES + (frames - 1) * HOP_SAMPLES + rng.gen_range(0..HOP_SAMPLES);
    let amp: f64 = rng.gen_range(200.0..8000.0);
    let f0: f64 = rng.gen_range(200.0..1500.0);
    (0..len)
        .map(|i| {
            let t = i as f64 / 16000.0;
            let tone = amp * (2.0 * std::f64::consts::PI * (f0 + 800.0 * t) * t).sin();
            (tone + rng.gen_range(-300.0..300.0)).clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

pub fn offline(model: &Model, samples: &[i16]) -> Vec<WindowPosterior> {
    let feats = compute_lfbe(&AudioBuffer::from_samples(samples.to_vec()), model.bins()).unwrap();
    model.infer_windows(&feats).unwrap()
}

/// Streams `samples` in the given chunk pattern (cycled) and finishes.
pub fn stream_chunked(model: &Arc<Model>, strategy: Strategy, samples: &[i16], chunks: &[usize]) -> Vec<StreamPosterior> {
    let mut engine = StreamEngine::new(model.clone(), strategy).unwrap();
    let mut out = Vec::new();
    let mut rest = samples;
    for &c in chunks.iter().cycle() {
        if rest.is_empty() {
            break;
        }
        let (head, tail) = rest.split_at(c.min(rest.len()));
        out.extend(engine.push_pcm(head).unwrap());
        rest = tail;
    }
    out.extend(engine.finish().unwrap());
    out
}

pub fn random_chunks(rng: &mut impl Rng) -> Vec<usize> {
    (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(1..=2000)).collect()
}

pub fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
}

/// Hand-set CRNN that fires on loud broadband audio.
///
/// A 4×8 averaging conv (stride 4) feeds a one-unit GRU whose update gate
/// is pinned open, so each state is `tanh(0.5·(mean log energy + 1.5))`:
/// about −1 on quiet noise and +1 on a loud burst. Five steps are summed
/// and mapped through `sigmoid(2·sum − 2)`.
pub fn energy_model() -> Model {
    use kws_core::model::{NamedTensor, WeightSet};
    let cfg = ModelConfig::new(
        "energy",
        20,
        8,
        vec![
            LayerSpec::Conv { kernel: [4, 8], stride: [4, 1], channels: 1, activation: Activation::Linear },
            LayerSpec::Flatten,
            LayerSpec::Gru { hidden: 1 },
            LayerSpec::SumOverTime,
            sigmoid_out(),
        ],
    );
    let t = |name: &str, shape: Vec<usize>, data: Vec<f32>| NamedTensor { name: name.into(), shape, data };
    let tensors = vec![
        t("layers.0.kernel", vec![4, 8, 1, 1], vec![1.0 / 32.0; 32]),
        t("layers.0.bias", vec![1], vec![1.5]),
        t("layers.2.w", vec![3, 1, 1], vec![0.0, 0.0, 0.5]),
        t("layers.2.u", vec![3, 1, 1], vec![0.0; 3]),
        t("layers.2.b", vec![3, 1], vec![20.0, 0.0, 0.0]),
        t("layers.4.kernel", vec![1, 1], vec![2.0]),
        t("layers.4.bias", vec![1], vec![-2.0]),
    ];
    let weights = WeightSet::from_tensors(&cfg, tensors).unwrap();
    Model::new(cfg, weights).unwrap()
}

/// Quiet noise of `len` samples with a loud burst over `burst` (samples).
pub fn planted(rng: &mut impl Rng, len: usize, burst: Option<std::ops::Range<usize>>) -> Vec<i16> {
    (0..len)
        .map(|i| match &burst {
            Some(b) if b.contains(&i) => rng.gen_range(-8000..8000),
            _ => rng.gen_range(-30..30),
        })
        .collect()
}
