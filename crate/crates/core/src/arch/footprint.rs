use super::config::{LayerSpec, ModelConfig, Shape};
use crate::error::Result;

/// Parameter and multiply cost of one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerFootprint {
    pub index: usize,
    pub kind: &'static str,
    pub parameters: u64,
    pub multiplies: u64,
    /// Additive bias terms (including batch-norm offsets) within `parameters`.
    pub biases: u64,
}

/// Footprint of a whole model for one inference window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FootprintReport {
    pub parameters: u64,
    pub multiplies: u64,
    pub biases: u64,
    pub layers: Vec<LayerFootprint>,
}

fn layer_cost(layer: &LayerSpec, input: Shape, output: Shape) -> (u64, u64, u64) {
    let u = |v: usize| v as u64;
    match (layer, input, output) {
        (LayerSpec::Conv { kernel: [kt, kf], channels, .. }, Shape::Grid { c: cin, .. }, Shape::Grid { t, f, c }) => {
            let taps = u(kt * kf * cin);
            (taps * u(*channels) + u(*channels), u(t * f * c) * taps, u(*channels))
        }
        (LayerSpec::BatchNorm { .. }, s, _) => (2 * u(s.channels()), 0, u(s.channels())),
        (LayerSpec::Gru { hidden: d }, Shape::Seq { steps, width: n }, _) => {
            let (n, d) = (u(n), u(*d));
            (3 * (d * (n + d) + d), u(steps) * 3 * (d * n + d * d), 3 * d)
        }
        (LayerSpec::Attention { .. }, Shape::Seq { steps, width: d }, _) => {
            let (h, d) = (u(steps), u(d));
            (3 * (d * d + d), 3 * h * d * d + 2 * h * h * d, 3 * d)
        }
        (LayerSpec::Dense { units, .. }, Shape::Vector(n), _) => {
            let (n, m) = (u(n), u(*units));
            (n * m + m, n * m, m)
        }
        _ => (0, 0, 0),
    }
}

/// Per-layer parameter and multiply accounting.
///
/// Multiplies count multiply-accumulates in weight products only;
/// activations, softmax normalisation and elementwise scaling are free.
pub fn footprint(config: &ModelConfig) -> Result<FootprintReport> {
    let shapes = config.shapes()?;
    let layers: Vec<LayerFootprint> = config
        .layers
        .iter()
        .enumerate()
        .map(|(index, layer)| {
            let (parameters, multiplies, biases) = layer_cost(layer, shapes[index], shapes[index + 1]);
            LayerFootprint { index, kind: layer.kind(), parameters, multiplies, biases }
        })
        .collect();
    Ok(FootprintReport {
        parameters: layers.iter().map(|l| l.parameters).sum(),
        multiplies: layers.iter().map(|l| l.multiplies).sum(),
        biases: layers.iter().map(|l| l.biases).sum(),
        layers,
    })
}

/// Trainable parameter count (batch-norm running statistics excluded).
pub fn count_parameters(config: &ModelConfig) -> Result<FootprintReport> {
    footprint(config)
}

/// Multiplies for one inference window.
pub fn count_multiplies(config: &ModelConfig) -> Result<FootprintReport> {
    footprint(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{Activation, AttentionScale};

    fn sigmoid_out() -> LayerSpec {
        LayerSpec::Dense { units: 1, activation: Activation::Sigmoid }
    }

    #[test]
    fn dense_four_to_three() {
        let cfg = ModelConfig::new(
            "d",
            1,
            4,
            vec![LayerSpec::FlattenAll, LayerSpec::Dense { units: 3, activation: Activation::Relu }, sigmoid_out()],
        );
        let r = footprint(&cfg).unwrap();
        assert_eq!(r.layers[1].parameters, 15);
        assert_eq!(r.layers[1].multiplies, 12);
        assert_eq!(r.multiplies, r.parameters - r.biases);
    }

    #[test]
    fn gru_formula() {
        // 10 steps of width 512 straight off the flatten
        let cfg = ModelConfig::new(
            "g",
            10,
            512,
            vec![LayerSpec::Flatten, LayerSpec::Gru { hidden: 64 }, LayerSpec::SumOverTime, sigmoid_out()],
        );
        let r = footprint(&cfg).unwrap();
        assert_eq!(r.layers[1].parameters, 110_784);
        assert_eq!(r.layers[1].multiplies, 1_105_920);
    }

    #[test]
    fn unit_conv_costs_one_per_cell() {
        let cfg = ModelConfig::new(
            "c",
            7,
            5,
            vec![
                LayerSpec::Conv { kernel: [1, 1], stride: [1, 1], channels: 1, activation: Activation::Linear },
                LayerSpec::FlattenAll,
                sigmoid_out(),
            ],
        );
        assert_eq!(footprint(&cfg).unwrap().layers[0].multiplies, 35);
    }

    #[test]
    fn attention_and_batchnorm() {
        let cfg = ModelConfig::new(
            "a",
            6,
            4,
            vec![
                LayerSpec::BatchNorm { eps: 1e-3 },
                LayerSpec::Flatten,
                LayerSpec::Gru { hidden: 5 },
                LayerSpec::Attention { scale: AttentionScale::Dk },
                LayerSpec::SumOverTime,
                sigmoid_out(),
            ],
        );
        let r = footprint(&cfg).unwrap();
        assert_eq!((r.layers[0].parameters, r.layers[0].multiplies), (2, 0));
        assert_eq!(r.layers[3].parameters, 3 * (25 + 5));
        assert_eq!(r.layers[3].multiplies, 3 * 6 * 25 + 2 * 36 * 5);
        assert_eq!(r.parameters, r.layers.iter().map(|l| l.parameters).sum::<u64>());
    }
}
