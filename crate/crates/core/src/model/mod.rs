//! Weight sets and the offline forward pass.

mod params;

use std::sync::Arc;

pub use params::{expected_tensors, layer_tensor_shapes, tensor_name, LayerParams, NamedTensor, WeightSet};

use crate::arch::{front_geometry, LayerSpec, ModelConfig, ReceptiveField};
use crate::error::{Error, Result};
use crate::frontend::FeatureMatrix;
use crate::nncore::{GruParams, MacCounter, NoCount, Tensor3, TimestepSequence};

/// Activation flowing between layers.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Activations {
    Grid(Tensor3),
    Seq(TimestepSequence),
    Vector(Vec<f32>),
}

/// Posterior for one model window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPosterior {
    /// Index of the first front-end timestep in the window.
    pub first_step: usize,
    /// First and last input frame the window depends on.
    pub first_frame: usize,
    pub last_frame: usize,
    pub posterior: f32,
}

/// A validated config together with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    weights: WeightSet,
    timing: ReceptiveField,
}

impl Model {
    pub fn new(config: ModelConfig, weights: WeightSet) -> Result<Self> {
        config.validate()?;
        if weights.layers().len() != config.layers.len() {
            return Err(Error::shape(format!(
                "weight set has {} layers, config has {}",
                weights.layers().len(),
                config.layers.len()
            )));
        }
        // rebinding through the tensor list re-checks every shape
        let weights = WeightSet::from_tensors(&config, weights.tensors(&config)?)?;
        let timing = front_geometry(&config)?;
        Ok(Self { config, weights, timing })
    }

    /// Seeded random weights for `config`.
    pub fn random(config: ModelConfig, seed: u64) -> Result<Self> {
        let weights = WeightSet::random(&config, seed)?;
        Self::new(config, weights)
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    /// Front-end geometry. Models without convolutions report one step per
    /// input frame (or per delta frame).
    pub fn timing(&self) -> ReceptiveField {
        self.timing
    }

    /// Input frames actually consumed by one window.
    pub fn span(&self) -> usize {
        let t = self.timing;
        (t.steps - 1) * t.stride + t.rf
    }

    pub fn bins(&self) -> usize {
        self.config.input.bins
    }

    pub fn input_frames(&self) -> usize {
        self.config.input.frames
    }

    pub(crate) fn params(&self, index: usize) -> &LayerParams {
        &self.weights.layers()[index]
    }

    pub(crate) fn apply_layer<C: MacCounter>(
        &self,
        index: usize,
        x: Activations,
        counter: &mut C,
    ) -> Result<Activations> {
        let layer = &self.config.layers[index];
        Ok(match (layer, self.params(index), x) {
            (LayerSpec::Delta, _, Activations::Grid(g)) => {
                let (t, f, c) = g.dims();
                let row = f * c;
                let data = g.as_slice();
                let out = (1..t)
                    .flat_map(|i| (0..row).map(move |j| data[i * row + j] - data[(i - 1) * row + j]))
                    .collect();
                Activations::Grid(Tensor3::new((t - 1, f, c), out)?)
            }
            (LayerSpec::Conv { .. }, LayerParams::Conv(conv), Activations::Grid(g)) => {
                Activations::Grid(conv.forward_counted(&g, counter)?)
            }
            (LayerSpec::BatchNorm { .. }, LayerParams::BatchNorm(bn), mut x) => {
                match &mut x {
                    Activations::Grid(g) => bn.apply(g.as_mut_slice()),
                    Activations::Seq(s) => bn.apply(s.as_mut_slice()),
                    Activations::Vector(v) => bn.apply(v),
                }
                x
            }
            (LayerSpec::Flatten, _, Activations::Grid(g)) => Activations::Seq(g.flatten()),
            // a sequence is already one row per timestep
            (LayerSpec::Flatten, _, s @ Activations::Seq(_)) => s,
            (LayerSpec::FlattenAll, _, Activations::Grid(g)) => Activations::Vector(g.into_vec()),
            (LayerSpec::FlattenAll, _, Activations::Seq(s)) => Activations::Vector(s.into_vec()),
            (LayerSpec::Gru { .. }, LayerParams::Gru(gru), Activations::Seq(s)) => {
                let h0 = vec![0.0; gru.hidden_dim()];
                Activations::Seq(gru.forward_counted(&s, &h0, counter)?)
            }
            (LayerSpec::Attention { .. }, LayerParams::Attention(att), Activations::Seq(s)) => {
                Activations::Seq(att.forward_counted(&s, counter)?)
            }
            (LayerSpec::SumOverTime, _, Activations::Seq(s)) => Activations::Vector(s.sum_over_time()),
            (LayerSpec::Dense { .. }, LayerParams::Dense(d), Activations::Vector(v)) => {
                Activations::Vector(d.forward_counted(&v, counter)?)
            }
            (layer, _, _) => {
                return Err(Error::shape(format!("layer {index} ({}) got an incompatible input", layer.kind())))
            }
        })
    }

    pub(crate) fn run_layers<C: MacCounter>(
        &self,
        range: std::ops::Range<usize>,
        mut x: Activations,
        counter: &mut C,
    ) -> Result<Activations> {
        for i in range {
            x = self.apply_layer(i, x, counter)?;
        }
        Ok(x)
    }

    fn scalar(x: Activations) -> Result<f32> {
        match x {
            Activations::Vector(v) if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::shape("model did not produce a single posterior")),
        }
    }

    /// Runs the front end (everything before the first flatten) on any
    /// number of frames, returning one row per front-end timestep.
    pub fn front_end(&self, features: &FeatureMatrix) -> Result<TimestepSequence> {
        if features.num_frames() < self.timing.rf {
            return Err(Error::InsufficientFrames { got: features.num_frames(), need: self.timing.rf });
        }
        let x = self.input_tensor(features, false)?;
        match self.run_layers(0..self.config.front_len(), x, &mut NoCount)? {
            Activations::Grid(g) => Ok(g.flatten()),
            _ => Err(Error::shape("front end did not produce a grid")),
        }
    }

    /// Runs the layers after the front end on `h` front-end timesteps.
    pub fn tail<C: MacCounter>(&self, steps: TimestepSequence, counter: &mut C) -> Result<f32> {
        let range = self.config.front_len()..self.config.layers.len();
        Self::scalar(self.run_layers(range, Activations::Seq(steps), counter)?)
    }

    /// GRU layers of a recurrent tail, in order, with the index of the
    /// first layer after them.
    pub(crate) fn recurrent_layers(&self) -> Option<(Vec<&GruParams>, usize)> {
        let span = self.config.recurrent_span()?;
        let grus = span
            .clone()
            .map(|i| match self.params(i) {
                LayerParams::Gru(g) => Some(g),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some((grus, span.end))
    }

    /// Runs everything after the recurrent stack on its `h` output rows.
    pub(crate) fn post_recurrent(&self, from: usize, states: TimestepSequence) -> Result<f32> {
        Self::scalar(self.run_layers(from..self.config.layers.len(), Activations::Seq(states), &mut NoCount)?)
    }

    fn input_tensor(&self, window: &FeatureMatrix, whole_window: bool) -> Result<Activations> {
        let (t, f) = (window.num_frames(), self.config.input.bins);
        if window.num_bins() != f {
            return Err(Error::shape(format!("model expects {f} bins, got {}", window.num_bins())));
        }
        if whole_window && t != self.config.input.frames {
            return Err(Error::shape(format!("model expects {} frames, got {t}", self.config.input.frames)));
        }
        Ok(Activations::Grid(Tensor3::new((t, f, 1), window.as_slice().to_vec())?))
    }

    /// Posterior for one window of exactly `input.frames` frames.
    pub fn forward(&self, window: &FeatureMatrix) -> Result<f32> {
        self.forward_counted(window, &mut NoCount)
    }

    pub fn forward_counted<C: MacCounter>(&self, window: &FeatureMatrix, counter: &mut C) -> Result<f32> {
        let x = self.input_tensor(window, true)?;
        Self::scalar(self.run_layers(0..self.config.layers.len(), x, counter)?)
    }

    /// Offline sliding-window inference: windows start every `stride`
    /// frames and each covers [`Model::span`] frames.
    ///
    /// Frames past the span are ignored by valid convolutions, so a window
    /// is scored on its span padded with copies it never reads.
    pub fn infer_windows(&self, features: &FeatureMatrix) -> Result<Vec<WindowPosterior>> {
        let span = self.span();
        let n = features.num_frames();
        if n < span {
            return Err(Error::InsufficientFrames { got: n, need: span });
        }
        let t = self.config.input.frames;
        let k = self.timing.stride;
        (0..=(n - span) / k)
            .map(|j| {
                let start = j * k;
                let window = if start + t <= n {
                    features.window(start, t)?
                } else {
                    // the unread tail beyond the span is filled with zeros
                    let mut data = features.window(start, n - start)?.as_slice().to_vec();
                    data.resize(t * features.num_bins(), 0.0);
                    FeatureMatrix::new(t, features.num_bins(), data)?
                };
                Ok(WindowPosterior {
                    first_step: j,
                    first_frame: start,
                    last_frame: start + span - 1,
                    posterior: self.forward(&window)?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{count_multiplies, reference_config, receptive_field};
    use crate::nncore::MacTally;

    fn features(frames: usize, bins: usize, seed: u64) -> FeatureMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::new(frames, bins, (0..frames * bins).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap()
    }

    #[test]
    fn crnn_239k_front_end_yields_ten_by_512() {
        let model = Model::random(reference_config("CRNN-239k").unwrap(), 3).unwrap();
        let steps = model.front_end(&features(100, 64, 1)).unwrap();
        assert_eq!((steps.steps(), steps.width()), (10, 512));
        assert_eq!(steps.steps(), receptive_field(model.config()).unwrap().steps);
    }

    #[test]
    fn counted_forward_matches_accounting() {
        for name in ["CRNN-89k", "CNN-28k", "DNN-51k", "Delta-LFBE-CRNN-89k"] {
            let cfg = reference_config(name).unwrap();
            let model = Model::random(cfg.clone(), 5).unwrap();
            let mut tally = MacTally::default();
            let p = model.forward_counted(&features(cfg.input.frames, cfg.input.bins, 2), &mut tally).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert_eq!(tally.0, count_multiplies(&cfg).unwrap().multiplies, "{name}");
        }
    }

    #[test]
    fn front_end_and_tail_compose_to_forward() {
        let model = Model::random(reference_config("CRNN-58k").unwrap(), 9).unwrap();
        let x = features(100, 20, 4);
        let split = model.tail(model.front_end(&x).unwrap(), &mut NoCount).unwrap();
        assert_eq!(split.to_bits(), model.forward(&x).unwrap().to_bits());
    }

    #[test]
    fn sliding_windows() {
        let model = Model::random(reference_config("CRNN-58k").unwrap(), 9).unwrap();
        let x = features(140, 20, 4);
        let w = model.infer_windows(&x).unwrap();
        let k = model.timing().stride;
        assert_eq!(w.len(), (140 - model.span()) / k + 1);
        assert_eq!(w[1].first_frame, k);
        assert_eq!(w[1].posterior, model.forward(&x.window(k, 100).unwrap()).unwrap());
        assert!(matches!(model.infer_windows(&features(50, 20, 1)), Err(Error::InsufficientFrames { .. })));
    }
}
