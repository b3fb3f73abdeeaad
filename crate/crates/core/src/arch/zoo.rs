use super::config::{LayerSpec, ModelConfig};
use crate::error::{Error, Result};
use crate::nncore::{Activation, AttentionScale};

/// Published footprint of a reference model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub name: &'static str,
    pub parameters: u64,
    pub multiplies: u64,
}

/// Every reference model with its published parameter and multiply budget.
pub const ZOO: &[Budget] = &[
    Budget { name: "CRNN-239k", parameters: 239_000, multiplies: 10_250_000 },
    Budget { name: "Delta-LFBE-CRNN-239k", parameters: 239_000, multiplies: 10_200_000 },
    Budget { name: "CRNN-183k", parameters: 183_000, multiplies: 5_730_000 },
    Budget { name: "CNN-263k", parameters: 263_000, multiplies: 5_250_000 },
    Budget { name: "CRNN-89k", parameters: 89_000, multiplies: 1_770_000 },
    Budget { name: "Delta-LFBE-CRNN-89k", parameters: 89_000, multiplies: 1_770_000 },
    Budget { name: "CRNN-58k", parameters: 58_000, multiplies: 1_470_000 },
    Budget { name: "CNN-28k", parameters: 28_000, multiplies: 2_920_000 },
    Budget { name: "DNN-233k", parameters: 233_000, multiplies: 233_000 },
    Budget { name: "DNN-51k", parameters: 51_000, multiplies: 51_000 },
];

pub fn budget(name: &str) -> Option<&'static Budget> {
    ZOO.iter().find(|b| b.name == name)
}

const BN_EPS: f32 = 1e-3;

fn conv(kt: usize, kf: usize, st: usize, sf: usize, channels: usize) -> [LayerSpec; 2] {
    [
        LayerSpec::Conv { kernel: [kt, kf], stride: [st, sf], channels, activation: Activation::Relu },
        LayerSpec::BatchNorm { eps: BN_EPS },
    ]
}

fn relu(units: usize) -> LayerSpec {
    LayerSpec::Dense { units, activation: Activation::Relu }
}

fn output() -> LayerSpec {
    LayerSpec::Dense { units: 1, activation: Activation::Sigmoid }
}

fn recurrent_tail(hidden: usize, head: &[usize]) -> Vec<LayerSpec> {
    let mut tail = vec![
        LayerSpec::Flatten,
        LayerSpec::Gru { hidden },
        LayerSpec::Attention { scale: AttentionScale::Dk },
        LayerSpec::SumOverTime,
    ];
    tail.extend(head.iter().map(|&u| relu(u)));
    tail.push(output());
    tail
}

fn crnn_239k(delta: bool) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    if delta {
        layers.push(LayerSpec::Delta);
    }
    layers.extend(conv(8, 10, 2, 2, 16));
    layers.extend(conv(5, 7, 2, 2, 32));
    layers.extend(conv(4, 5, 2, 2, 128));
    layers.extend(recurrent_tail(64, &[128, 64]));
    layers
}

fn crnn_small(delta: bool, hidden: usize) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    if delta {
        layers.push(LayerSpec::Delta);
    }
    layers.extend(conv(8, 5, 2, 2, 8));
    layers.extend(conv(5, 3, 2, 1, 16));
    layers.extend(conv(4, 3, 2, 2, 64));
    layers.extend(recurrent_tail(hidden, &[64]));
    layers
}

/// Builds the named reference model.
pub fn reference_config(name: &str) -> Result<ModelConfig> {
    let (frames, bins, layers) = match name {
        "CRNN-239k" => (100, 64, crnn_239k(false)),
        "Delta-LFBE-CRNN-239k" => (101, 64, crnn_239k(true)),
        "CRNN-183k" => {
            let mut layers = Vec::new();
            layers.extend(conv(8, 10, 2, 2, 16));
            layers.extend(conv(3, 3, 1, 2, 16));
            layers.extend(conv(5, 7, 2, 2, 32));
            layers.extend(conv(4, 3, 2, 1, 128));
            layers.extend(recurrent_tail(64, &[256, 64]));
            (100, 64, layers)
        }
        "CNN-263k" => {
            let mut layers = Vec::new();
            layers.extend(conv(8, 8, 2, 2, 16));
            layers.extend(conv(5, 5, 2, 2, 24));
            layers.extend(conv(4, 4, 2, 2, 64));
            layers.extend([LayerSpec::FlattenAll, relu(72), output()]);
            (100, 64, layers)
        }
        "CRNN-89k" => (100, 20, crnn_small(false, 80)),
        "Delta-LFBE-CRNN-89k" => (101, 20, crnn_small(true, 80)),
        "CRNN-58k" => (100, 20, crnn_small(false, 56)),
        "CNN-28k" => {
            let mut layers = Vec::new();
            layers.extend(conv(3, 3, 1, 1, 12));
            layers.extend(conv(3, 3, 2, 1, 12));
            layers.extend(conv(3, 3, 2, 1, 32));
            layers.extend(conv(3, 3, 2, 2, 32));
            layers.extend(conv(3, 3, 2, 2, 44));
            layers.extend([LayerSpec::FlattenAll, output()]);
            (100, 20, layers)
        }
        "DNN-233k" | "DNN-51k" => {
            let width = if name == "DNN-233k" { 98 } else { 24 };
            let mut layers = vec![LayerSpec::FlattenAll];
            layers.extend((0..5).map(|_| relu(width)));
            layers.push(output());
            (100, 20, layers)
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(ModelConfig::new(name, frames, bins, layers))
}
