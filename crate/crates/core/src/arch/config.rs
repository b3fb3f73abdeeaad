use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::{Activation, AttentionScale};

/// Version tag carried by every serialized config.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// One layer of a model topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Frame differencing on the raw features; consumes one extra frame.
    Delta,
    Conv {
        /// (time, freq) kernel extent.
        kernel: [usize; 2],
        /// (time, freq) stride.
        stride: [usize; 2],
        channels: usize,
        #[serde(default)]
        activation: Activation,
    },
    #[serde(rename = "batchnorm")]
    BatchNorm { eps: f32 },
    /// t'×f'×C → t'×f'C, keeping time.
    Flatten,
    /// Anything → one vector.
    FlattenAll,
    Gru { hidden: usize },
    Attention {
        #[serde(default)]
        scale: AttentionScale,
    },
    SumOverTime,
    Dense {
        units: usize,
        #[serde(default)]
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Delta => "delta",
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::BatchNorm { .. } => "batchnorm",
            LayerSpec::Flatten => "flatten",
            LayerSpec::FlattenAll => "flatten_all",
            LayerSpec::Gru { .. } => "gru",
            LayerSpec::Attention { .. } => "attention",
            LayerSpec::SumOverTime => "sum_over_time",
            LayerSpec::Dense { .. } => "dense",
        }
    }

    /// Layers that operate on individual input rows and may appear before
    /// the first flatten.
    pub(crate) fn is_front(&self) -> bool {
        matches!(self, LayerSpec::Delta | LayerSpec::Conv { .. } | LayerSpec::BatchNorm { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    /// Input frames per inference window (100, or 101 with a delta front end).
    pub frames: usize,
    /// LFBE bins per frame.
    pub bins: usize,
}

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Grid { t: usize, f: usize, c: usize },
    Seq { steps: usize, width: usize },
    Vector(usize),
}

impl Shape {
    /// Size of the trailing (channel) axis.
    pub fn channels(&self) -> usize {
        match *self {
            Shape::Grid { c, .. } => c,
            Shape::Seq { width, .. } => width,
            Shape::Vector(n) => n,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Shape::Grid { t, f, c } => t * f * c,
            Shape::Seq { steps, width } => steps * width,
            Shape::Vector(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Grid { t, f: fr, c } => write!(f, "{t}x{fr}x{c}"),
            Shape::Seq { steps, width } => write!(f, "{steps}x{width}"),
            Shape::Vector(n) => write!(f, "{n}"),
        }
    }
}

/// Named model topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub schema_version: u32,
    pub name: String,
    pub input: InputSpec,
    pub layers: Vec<LayerSpec>,
}

impl ModelConfig {
    pub fn new(name: impl Into<String>, frames: usize, bins: usize, layers: Vec<LayerSpec>) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            name: name.into(),
            input: InputSpec { frames, bins },
            layers,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        Self::from_json(&text).map_err(|e| e.at(path))
    }

    /// Index of the first flatten; everything before it is row-local.
    pub fn front_len(&self) -> usize {
        self.layers
            .iter()
            .position(|l| !l.is_front())
            .unwrap_or(self.layers.len())
    }

    pub fn has_conv(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, LayerSpec::Conv { .. }))
    }

    pub fn has_delta(&self) -> bool {
        matches!(self.layers.first(), Some(LayerSpec::Delta))
    }

    /// True when the tail is `Flatten, Gru+, ...` with no later recurrence.
    pub fn is_recurrent(&self) -> bool {
        self.recurrent_span().is_some()
    }

    /// Layer range holding the leading GRU stack of the tail.
    pub fn recurrent_span(&self) -> Option<std::ops::Range<usize>> {
        let front = self.front_len();
        if !matches!(self.layers.get(front), Some(LayerSpec::Flatten)) {
            return None;
        }
        let start = front + 1;
        let end = start
            + self.layers[start..]
                .iter()
                .take_while(|l| matches!(l, LayerSpec::Gru { .. }))
                .count();
        let later_gru = self.layers[end..].iter().any(|l| matches!(l, LayerSpec::Gru { .. }));
        (end > start && !later_gru).then_some(start..end)
    }

    /// Validates layer compatibility and returns the shape after each layer,
    /// preceded by the input shape.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported config schema version {}",
                self.schema_version
            )));
        }
        let InputSpec { frames, bins } = self.input;
        if frames == 0 || bins == 0 {
            return Err(Error::config("input frames and bins must be positive"));
        }
        let mut shape = Shape::Grid { t: frames, f: bins, c: 1 };
        let mut shapes = vec![shape];
        let front = self.front_len();
        let mut flattens = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            let bad = |msg: String| Error::config(format!("layer {i} ({}): {msg}", layer.kind()));
            if i >= front && layer.is_front() && !matches!(layer, LayerSpec::BatchNorm { .. }) {
                return Err(bad("must precede the first flatten".into()));
            }
            shape = match (layer, shape) {
                (LayerSpec::Delta, Shape::Grid { t, f, c: 1 }) if i == 0 => {
                    if t < 2 {
                        return Err(bad("needs at least 2 input frames".into()));
                    }
                    Shape::Grid { t: t - 1, f, c: 1 }
                }
                (LayerSpec::Delta, _) => return Err(bad("only allowed as the first layer".into())),
                (LayerSpec::Conv { kernel, stride, channels, .. }, Shape::Grid { t, f, .. }) => {
                    let [kt, kf] = *kernel;
                    let [st, sf] = *stride;
                    if kt == 0 || kf == 0 || st == 0 || sf == 0 || *channels == 0 {
                        return Err(bad("kernel, stride and channels must be positive".into()));
                    }
                    if kt > t || kf > f {
                        return Err(bad(format!("kernel {kt}x{kf} larger than {t}x{f} input")));
                    }
                    Shape::Grid { t: (t - kt) / st + 1, f: (f - kf) / sf + 1, c: *channels }
                }
                (LayerSpec::BatchNorm { eps }, s) => {
                    if eps.is_nan() || *eps < 0.0 {
                        return Err(bad("eps must be non-negative".into()));
                    }
                    s
                }
                (LayerSpec::Flatten, Shape::Grid { t, f, c }) => {
                    flattens += 1;
                    Shape::Seq { steps: t, width: f * c }
                }
                (LayerSpec::FlattenAll, s @ (Shape::Grid { .. } | Shape::Seq { .. })) => {
                    flattens += 1;
                    Shape::Vector(s.len())
                }
                (LayerSpec::Gru { hidden }, Shape::Seq { steps, .. }) => {
                    if *hidden == 0 {
                        return Err(bad("hidden size must be positive".into()));
                    }
                    Shape::Seq { steps, width: *hidden }
                }
                (LayerSpec::Attention { .. }, s @ Shape::Seq { .. }) => s,
                (LayerSpec::SumOverTime, Shape::Seq { width, .. }) => Shape::Vector(width),
                (LayerSpec::Dense { units, .. }, Shape::Vector(_)) => {
                    if *units == 0 {
                        return Err(bad("units must be positive".into()));
                    }
                    Shape::Vector(*units)
                }
                (_, s) => return Err(bad(format!("incompatible with input shape {s}"))),
            };
            if shape.is_empty() {
                return Err(bad("produces an empty activation".into()));
            }
            shapes.push(shape);
        }
        if flattens != 1 {
            return Err(Error::config(format!("expected exactly one flatten, found {flattens}")));
        }
        match (self.layers.last(), shape) {
            (Some(LayerSpec::Dense { activation: Activation::Sigmoid, .. }), Shape::Vector(1)) => {}
            _ => return Err(Error::config("model must end in a 1-unit sigmoid dense layer")),
        }
        if self.layers.iter().any(|l| matches!(l, LayerSpec::Gru { .. })) {
            if !self.is_recurrent() {
                return Err(Error::config(
                    "recurrent layers must directly follow the time-preserving flatten",
                ));
            }
            if let Shape::Seq { steps, .. } = shapes[front + 1] {
                if steps < 2 {
                    return Err(Error::config(format!(
                        "conv front end yields {steps} timestep(s); a CRNN needs at least 2"
                    )));
                }
            }
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        self.shapes().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_sigmoid() -> LayerSpec {
        LayerSpec::Dense { units: 1, activation: Activation::Sigmoid }
    }

    #[test]
    fn json_round_trip() {
        let cfg = ModelConfig::new(
            "tiny",
            10,
            4,
            vec![
                LayerSpec::Conv { kernel: [3, 2], stride: [1, 1], channels: 2, activation: Activation::Relu },
                LayerSpec::BatchNorm { eps: 1e-3 },
                LayerSpec::Flatten,
                LayerSpec::Gru { hidden: 3 },
                LayerSpec::Attention { scale: AttentionScale::Dk },
                LayerSpec::SumOverTime,
                dense_sigmoid(),
            ],
        );
        let back = ModelConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.to_json().contains("\"kind\": \"batchnorm\""));
    }

    #[test]
    fn rejects_gru_without_flatten_first() {
        let cfg = ModelConfig::new(
            "bad",
            10,
            4,
            vec![LayerSpec::FlattenAll, LayerSpec::Dense { units: 3, activation: Activation::Relu }, dense_sigmoid()],
        );
        assert!(cfg.validate().is_ok());
        let cfg = ModelConfig::new("bad", 10, 4, vec![LayerSpec::Flatten, LayerSpec::SumOverTime, dense_sigmoid()]);
        assert!(cfg.validate().is_ok());
        let cfg = ModelConfig::new(
            "bad",
            10,
            4,
            vec![LayerSpec::Flatten, LayerSpec::Attention { scale: AttentionScale::Dk }, LayerSpec::Gru { hidden: 2 }, LayerSpec::SumOverTime, dense_sigmoid()],
        );
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_missing_sigmoid_head_and_double_flatten() {
        let cfg = ModelConfig::new("x", 4, 4, vec![LayerSpec::FlattenAll, LayerSpec::Dense { units: 1, activation: Activation::Relu }]);
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig::new("x", 4, 4, vec![LayerSpec::Flatten, LayerSpec::FlattenAll, dense_sigmoid()]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn crnn_needs_two_timesteps() {
        let cfg = ModelConfig::new(
            "x",
            4,
            4,
            vec![
                LayerSpec::Conv { kernel: [4, 1], stride: [1, 1], channels: 1, activation: Activation::Linear },
                LayerSpec::Flatten,
                LayerSpec::Gru { hidden: 2 },
                LayerSpec::SumOverTime,
                dense_sigmoid(),
            ],
        );
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("timestep")));
    }
}
