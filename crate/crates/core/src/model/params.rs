use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arch::{LayerSpec, ModelConfig, Shape};
use crate::error::{Error, Result, WeightFileError};
use crate::nncore::{AttentionParams, BatchNorm, Conv2d, Dense, GruParams, Projection};

/// Trained tensors of one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    /// Layers without weights (delta, flatten, pooling).
    Stateless,
    Conv(Conv2d),
    BatchNorm(BatchNorm),
    Gru(GruParams),
    Attention(AttentionParams),
    Dense(Dense),
}

/// A named, shaped tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// Tensor name under layer `index`.
pub fn tensor_name(index: usize, field: &str) -> String {
    format!("layers.{index}.{field}")
}

/// Tensor fields and shapes a layer must carry, in file order.
pub fn layer_tensor_shapes(layer: &LayerSpec, input: Shape) -> Vec<(&'static str, Vec<usize>)> {
    match (layer, input) {
        (LayerSpec::Conv { kernel: [kt, kf], channels, .. }, s) => {
            vec![("kernel", vec![*kt, *kf, s.channels(), *channels]), ("bias", vec![*channels])]
        }
        (LayerSpec::BatchNorm { .. }, s) => {
            let c = s.channels();
            vec![("gamma", vec![c]), ("beta", vec![c]), ("mean", vec![c]), ("var", vec![c])]
        }
        (LayerSpec::Gru { hidden: d }, s) => {
            let n = s.channels();
            vec![("w", vec![3, *d, n]), ("u", vec![3, *d, *d]), ("b", vec![3, *d])]
        }
        (LayerSpec::Attention { .. }, s) => {
            let d = s.channels();
            ["q", "k", "v"]
                .into_iter()
                .flat_map(|p| {
                    let (w, b) = match p {
                        "q" => ("w_q", "b_q"),
                        "k" => ("w_k", "b_k"),
                        _ => ("w_v", "b_v"),
                    };
                    [(w, vec![d, d]), (b, vec![d])]
                })
                .collect()
        }
        (LayerSpec::Dense { units, .. }, s) => vec![("kernel", vec![*units, s.len()]), ("bias", vec![*units])],
        _ => Vec::new(),
    }
}

/// Every tensor a config requires, named and in file order.
pub fn expected_tensors(config: &ModelConfig) -> Result<Vec<(usize, String, Vec<usize>)>> {
    let shapes = config.shapes()?;
    Ok(config
        .layers
        .iter()
        .enumerate()
        .flat_map(|(i, layer)| {
            layer_tensor_shapes(layer, shapes[i])
                .into_iter()
                .map(move |(field, shape)| (i, tensor_name(i, field), shape))
        })
        .collect())
}

/// Per-layer weights bound to a [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    layers: Vec<LayerParams>,
}

fn build_layer(layer: &LayerSpec, input: Shape, mut take: impl FnMut(&str) -> Vec<f32>) -> Result<LayerParams> {
    Ok(match layer {
        LayerSpec::Conv { kernel: [kt, kf], stride: [st, sf], channels, activation } => LayerParams::Conv(Conv2d::new(
            (*kt, *kf),
            (*st, *sf),
            input.channels(),
            *channels,
            take("kernel"),
            take("bias"),
            *activation,
        )?),
        LayerSpec::BatchNorm { eps } => {
            let (gamma, beta, mean, var) = (take("gamma"), take("beta"), take("mean"), take("var"));
            LayerParams::BatchNorm(BatchNorm::new(gamma, beta, mean, var, *eps)?)
        }
        LayerSpec::Gru { hidden } => {
            let (w, u, b) = (take("w"), take("u"), take("b"));
            LayerParams::Gru(GruParams::new(input.channels(), *hidden, w, u, b)?)
        }
        LayerSpec::Attention { scale } => {
            let (wq, bq, wk, bk, wv, bv) = (take("w_q"), take("b_q"), take("w_k"), take("b_k"), take("w_v"), take("b_v"));
            LayerParams::Attention(AttentionParams::new(input.channels(), wq, bq, wk, bk, wv, bv, *scale)?)
        }
        LayerSpec::Dense { units, activation } => {
            LayerParams::Dense(Dense::new(input.len(), *units, take("kernel"), take("bias"), *activation)?)
        }
        LayerSpec::Delta
        | LayerSpec::Flatten
        | LayerSpec::FlattenAll
        | LayerSpec::SumOverTime => LayerParams::Stateless,
    })
}

impl WeightSet {
    /// Binds named tensors to `config`, rejecting missing, extra or
    /// mis-shaped tensors.
    pub fn from_tensors(config: &ModelConfig, tensors: Vec<NamedTensor>) -> Result<Self> {
        let mut by_name: BTreeMap<String, NamedTensor> = BTreeMap::new();
        for t in tensors {
            if by_name.contains_key(&t.name) {
                return Err(WeightFileError::Header(format!("duplicate tensor `{}`", t.name)).into());
            }
            by_name.insert(t.name.clone(), t);
        }
        let shapes = config.shapes()?;
        let mut layers = Vec::with_capacity(config.layers.len());
        for (i, layer) in config.layers.iter().enumerate() {
            let mut fields = BTreeMap::new();
            for (field, shape) in layer_tensor_shapes(layer, shapes[i]) {
                let name = tensor_name(i, field);
                let t = by_name
                    .remove(&name)
                    .ok_or_else(|| WeightFileError::MissingTensor { layer: i, name: name.clone() })?;
                if t.shape != shape {
                    return Err(WeightFileError::ShapeMismatch { layer: i, name, expected: shape, actual: t.shape }.into());
                }
                if t.data.len() != shape.iter().product::<usize>() {
                    return Err(Error::shape(format!("tensor `{name}` data does not match its shape")));
                }
                fields.insert(field, t.data);
            }
            layers.push(build_layer(layer, shapes[i], |f| fields.remove(f).unwrap_or_default())?);
        }
        if let Some(name) = by_name.into_keys().next() {
            return Err(WeightFileError::UnexpectedTensor(name).into());
        }
        Ok(Self { layers })
    }

    /// All-zero weights, except batch-norm variances of one.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        Self::filled(config, |_, field| if field == "var" { 1.0 } else { 0.0 })
    }

    /// Uniform(-0.1, 0.1) weights from a seeded ChaCha8 generator. Batch-norm
    /// scales and variances are drawn around one.
    pub fn random(config: &ModelConfig, seed: u64) -> Result<Self> {
        Self::random_scaled(config, seed, 0.1)
    }

    /// Like [`WeightSet::random`] with weights drawn from (-scale, scale).
    pub fn random_scaled(config: &ModelConfig, seed: u64, scale: f32) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::filled(config, |_, field| {
            let u = rng.gen_range(-scale..scale);
            match field {
                "gamma" | "var" => 1.0 + u,
                _ => u,
            }
        })
    }

    fn filled(config: &ModelConfig, mut value: impl FnMut(usize, &str) -> f32) -> Result<Self> {
        let tensors = expected_tensors(config)?
            .into_iter()
            .map(|(i, name, shape)| {
                let field = name.rsplit('.').next().unwrap_or_default().to_string();
                let data = (0..shape.iter().product::<usize>()).map(|_| value(i, &field)).collect();
                NamedTensor { name, shape, data }
            })
            .collect();
        Self::from_tensors(config, tensors)
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    /// Named tensors in file order.
    pub fn tensors(&self, config: &ModelConfig) -> Result<Vec<NamedTensor>> {
        let shapes = config.shapes()?;
        let mut out = Vec::new();
        for (i, (layer, params)) in config.layers.iter().zip(&self.layers).enumerate() {
            let mut data: BTreeMap<&str, &[f32]> = BTreeMap::new();
            match params {
                LayerParams::Stateless => {}
                LayerParams::Conv(c) => {
                    data.insert("kernel", c.weights());
                    data.insert("bias", c.bias());
                }
                LayerParams::BatchNorm(b) => {
                    data.insert("gamma", b.gamma());
                    data.insert("beta", b.beta());
                    data.insert("mean", b.mean());
                    data.insert("var", b.var());
                }
                LayerParams::Gru(g) => {
                    data.insert("w", g.w());
                    data.insert("u", g.u());
                    data.insert("b", g.b());
                }
                LayerParams::Attention(a) => {
                    for (p, w, b) in [
                        (Projection::Query, "w_q", "b_q"),
                        (Projection::Key, "w_k", "b_k"),
                        (Projection::Value, "w_v", "b_v"),
                    ] {
                        let (wt, bt) = a.weights(p);
                        data.insert(w, wt);
                        data.insert(b, bt);
                    }
                }
                LayerParams::Dense(d) => {
                    data.insert("kernel", d.weights());
                    data.insert("bias", d.bias());
                }
            }
            for (field, shape) in layer_tensor_shapes(layer, shapes[i]) {
                let values = data
                    .get(field)
                    .ok_or_else(|| WeightFileError::MissingTensor { layer: i, name: tensor_name(i, field) })?;
                out.push(NamedTensor { name: tensor_name(i, field), shape, data: values.to_vec() });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::reference_config;

    #[test]
    fn random_is_seeded_and_in_range() {
        let cfg = reference_config("CRNN-58k").unwrap();
        let a = WeightSet::random(&cfg, 7).unwrap();
        assert_eq!(a, WeightSet::random(&cfg, 7).unwrap());
        assert_ne!(a, WeightSet::random(&cfg, 8).unwrap());
        for t in a.tensors(&cfg).unwrap() {
            let centre = if t.name.ends_with("gamma") || t.name.ends_with("var") { 1.0 } else { 0.0 };
            assert!(t.data.iter().all(|v| (v - centre).abs() < 0.1), "{}", t.name);
        }
    }

    #[test]
    fn tensor_round_trip() {
        let cfg = reference_config("CNN-28k").unwrap();
        let w = WeightSet::random(&cfg, 1).unwrap();
        let back = WeightSet::from_tensors(&cfg, w.tensors(&cfg).unwrap()).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn binding_errors_name_the_layer() {
        let cfg = reference_config("DNN-51k").unwrap();
        let mut tensors = WeightSet::zeros(&cfg).unwrap().tensors(&cfg).unwrap();
        tensors[2].shape = vec![24, 25];
        let err = WeightSet::from_tensors(&cfg, tensors.clone()).unwrap_err();
        assert!(matches!(err, Error::WeightFile(WeightFileError::ShapeMismatch { layer: 2, .. })), "{err}");

        tensors.remove(2);
        let err = WeightSet::from_tensors(&cfg, tensors.clone()).unwrap_err();
        assert!(matches!(err, Error::WeightFile(WeightFileError::MissingTensor { layer: 2, .. })));

        let mut extra = WeightSet::zeros(&cfg).unwrap().tensors(&cfg).unwrap();
        extra.push(NamedTensor { name: "layers.0.kernel".into(), shape: vec![1], data: vec![0.0] });
        let err = WeightSet::from_tensors(&cfg, extra).unwrap_err();
        assert!(matches!(err, Error::WeightFile(WeightFileError::UnexpectedTensor(_))));
    }
}
