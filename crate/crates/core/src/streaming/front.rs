use crate::arch::LayerSpec;
use crate::error::{Error, Result};
use crate::model::{LayerParams, Model};
use crate::nncore::{BatchNorm, Conv2d, NoCount};

/// One row of front-end output: the `f'·C` vector for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvTimestep {
    /// 0-based timestep index since the start of the stream.
    pub index: usize,
    pub values: Vec<f32>,
}

/// Fixed-capacity store of the most recent input rows of one conv layer.
#[derive(Debug, Clone)]
pub struct ConvRingBuffer {
    width: usize,
    capacity: usize,
    data: Vec<f32>,
    /// Rows written so far; row `r` lives in slot `r % capacity`.
    written: usize,
}

impl ConvRingBuffer {
    /// Capacity is `kernel_time + stride_time - 1` rows.
    pub fn new(kernel_time: usize, stride_time: usize, width: usize) -> Self {
        let capacity = kernel_time + stride_time - 1;
        Self { width, capacity, data: vec![0.0; capacity * width], written: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn rows_written(&self) -> usize {
        self.written
    }

    pub fn push(&mut self, row: &[f32]) {
        debug_assert_eq!(row.len(), self.width);
        let slot = self.written % self.capacity;
        self.data[slot * self.width..(slot + 1) * self.width].copy_from_slice(row);
        self.written += 1;
    }

    /// Row `r`, if still held.
    pub fn row(&self, r: usize) -> Option<&[f32]> {
        if r >= self.written || r + self.capacity < self.written {
            return None;
        }
        let slot = r % self.capacity;
        Some(&self.data[slot * self.width..(slot + 1) * self.width])
    }

    fn len(&self) -> usize {
        self.data.len()
    }
}

#[derive(Debug, Clone)]
enum Stage {
    Delta { previous: Option<Vec<f32>> },
    Conv { layer: usize, in_freq: usize, ring: ConvRingBuffer, emitted: usize },
    Norm { layer: usize },
}

/// Row-at-a-time evaluation of a model's front end.
///
/// Each incoming frame passes through delta, conv and batch-norm stages;
/// a conv stage emits output row `o` once input row `o·stride + kernel - 1`
/// has arrived, reading its window from a ring buffer.
#[derive(Debug, Clone)]
pub struct StreamingFrontEnd {
    stages: Vec<Stage>,
    input_width: usize,
    emitted: usize,
}

impl StreamingFrontEnd {
    pub fn new(model: &Model) -> Result<Self> {
        let config = model.config();
        let shapes = config.shapes()?;
        let mut stages = Vec::new();
        for (i, layer) in config.layers[..config.front_len()].iter().enumerate() {
            stages.push(match layer {
                LayerSpec::Delta => Stage::Delta { previous: None },
                LayerSpec::Conv { kernel, stride, .. } => {
                    let (in_freq, width) = match shapes[i] {
                        crate::arch::Shape::Grid { f, c, .. } => (f, f * c),
                        _ => return Err(Error::shape("conv input must be a grid")),
                    };
                    Stage::Conv { layer: i, in_freq, ring: ConvRingBuffer::new(kernel[0], stride[0], width), emitted: 0 }
                }
                LayerSpec::BatchNorm { .. } => Stage::Norm { layer: i },
                other => return Err(Error::shape(format!("`{}` cannot stream row by row", other.kind()))),
            });
        }
        Ok(Self { stages, input_width: config.input.bins, emitted: 0 })
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    /// Timesteps emitted so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Floats held across calls.
    pub fn state_size(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match s {
                Stage::Delta { previous } => previous.as_ref().map_or(0, Vec::len),
                Stage::Conv { ring, .. } => ring.len(),
                Stage::Norm { .. } => 0,
            })
            .sum()
    }

    /// Feeds one input frame and returns the timesteps it completes.
    pub fn push(&mut self, model: &Model, frame: &[f32]) -> Result<Vec<ConvTimestep>> {
        if frame.len() != self.input_width {
            return Err(Error::shape(format!("frame has {} bins, expected {}", frame.len(), self.input_width)));
        }
        let mut rows = vec![frame.to_vec()];
        for stage in &mut self.stages {
            let mut next = Vec::new();
            for row in rows {
                match stage {
                    Stage::Delta { previous } => {
                        if let Some(prev) = previous.as_mut() {
                            next.push(row.iter().zip(prev.iter()).map(|(a, b)| a - b).collect());
                            *prev = row;
                        } else {
                            *previous = Some(row);
                        }
                    }
                    Stage::Conv { layer, in_freq, ring, emitted } => {
                        let conv: &Conv2d = match model.params(*layer) {
                            LayerParams::Conv(c) => c,
                            _ => return Err(Error::shape("conv stage without conv weights")),
                        };
                        ring.push(&row);
                        let (kt, st) = (conv.kernel().0, conv.stride().0);
                        let start = *emitted * st;
                        if ring.rows_written() == start + kt {
                            let window: Vec<&[f32]> =
                                (start..start + kt).map(|r| ring.row(r).expect("row held by ring")).collect();
                            let out_freq = (*in_freq - conv.kernel().1) / conv.stride().1 + 1;
                            let mut out = vec![0.0; out_freq * conv.out_channels()];
                            conv.row(&window, *in_freq, &mut out, &mut NoCount);
                            *emitted += 1;
                            next.push(out);
                        }
                    }
                    Stage::Norm { layer } => {
                        let bn: &BatchNorm = match model.params(*layer) {
                            LayerParams::BatchNorm(b) => b,
                            _ => return Err(Error::shape("norm stage without batch-norm weights")),
                        };
                        let mut row = row;
                        bn.apply(&mut row);
                        next.push(row);
                    }
                }
            }
            rows = next;
        }
        Ok(rows
            .into_iter()
            .map(|values| {
                let index = self.emitted;
                self.emitted += 1;
                ConvTimestep { index, values }
            })
            .collect())
    }
}
