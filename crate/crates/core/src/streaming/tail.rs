use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::front::ConvTimestep;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::nncore::{GruParams, NoCount, TimestepSequence};

/// How full-window posteriors are produced from the timestep stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// `h` staggered GRU decoders; one posterior per timestep.
    #[default]
    Bank,
    /// Batched GRU over blocks of `2h - 1` timesteps; `h` posteriors per block.
    Hyper,
    /// Re-runs the whole tail over the last `h` timesteps. Works for any
    /// model, including ones without a recurrent layer.
    Window,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bank => "bank",
            Strategy::Hyper => "hyper",
            Strategy::Window => "window",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bank" => Ok(Strategy::Bank),
            "hyper" => Ok(Strategy::Hyper),
            "window" => Ok(Strategy::Window),
            other => Err(format!("unknown strategy `{other}` (expected bank, hyper or window)")),
        }
    }
}

/// A window posterior identified by its timesteps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPosterior {
    /// First and last timestep of the window.
    pub first_step: usize,
    pub last_step: usize,
    pub posterior: f32,
}

/// One decoder of a [`DecoderBank`]: a GRU stack started at `start`.
#[derive(Debug, Clone)]
struct Decoder {
    start: usize,
    /// One hidden state per GRU layer.
    states: Vec<Vec<f32>>,
    /// Top-layer outputs for the steps consumed so far.
    outputs: Vec<f32>,
    consumed: usize,
}

impl Decoder {
    fn new(grus: &[&GruParams], h: usize) -> Self {
        let top = grus.last().map_or(0, |g| g.hidden_dim());
        Self {
            start: 0,
            states: grus.iter().map(|g| vec![0.0; g.hidden_dim()]).collect(),
            outputs: Vec::with_capacity(h * top),
            consumed: 0,
        }
    }

    fn reset(&mut self, start: usize) {
        self.start = start;
        self.states.iter_mut().for_each(|s| s.fill(0.0));
        self.outputs.clear();
        self.consumed = 0;
    }

    fn consume(&mut self, grus: &[&GruParams], x: &[f32]) {
        let mut input = x.to_vec();
        for (gru, state) in grus.iter().zip(&mut self.states) {
            let mut next = vec![0.0; gru.hidden_dim()];
            gru.step(&input, state, &mut next, &mut NoCount);
            state.copy_from_slice(&next);
            input = next;
        }
        self.outputs.extend_from_slice(&input);
        self.consumed += 1;
    }

    fn len(&self) -> usize {
        self.states.iter().map(Vec::len).sum::<usize>() + self.outputs.capacity()
    }
}

/// `h` GRU decoders with staggered resets.
///
/// Decoder `s mod h` starts a fresh window at step `s`. Every live decoder
/// consumes each incoming step; the one that has seen `h` steps emits the
/// posterior for `[s-h+1, s]` and restarts at `s+1`.
#[derive(Debug, Clone)]
pub struct DecoderBank {
    h: usize,
    decoders: Vec<Decoder>,
    next_step: usize,
    tail_from: usize,
}

impl DecoderBank {
    pub fn new(model: &Model) -> Result<Self> {
        let (grus, tail_from) = model.recurrent_layers().ok_or_else(|| Error::Strategy {
            strategy: "bank",
            reason: "the model has no GRU directly after its front end".into(),
        })?;
        let h = model.timing().steps;
        let decoders = (0..h)
            .map(|start| {
                let mut d = Decoder::new(&grus, h);
                d.start = start;
                d
            })
            .collect();
        Ok(Self { h, decoders, next_step: 0, tail_from })
    }

    pub fn window_steps(&self) -> usize {
        self.h
    }

    /// `(start, steps consumed)` of each decoder, for schedule inspection.
    pub fn schedule(&self) -> Vec<(usize, usize)> {
        self.decoders.iter().map(|d| (d.start, d.consumed)).collect()
    }

    /// Index of the decoder that emits at step `s`.
    pub fn emitter(&self, s: usize) -> usize {
        (s + 1) % self.h
    }

    pub fn state_size(&self) -> usize {
        self.decoders.iter().map(Decoder::len).sum()
    }

    pub fn push(&mut self, model: &Model, step: &ConvTimestep) -> Result<Option<StepPosterior>> {
        let s = step.index;
        if s != self.next_step {
            return Err(Error::shape(format!("timestep {s} arrived out of order, expected {}", self.next_step)));
        }
        self.next_step += 1;
        let (grus, _) = model.recurrent_layers().expect("checked at construction");
        let h = self.h;
        self.decoders[s % h].reset(s);
        for d in self.decoders.iter_mut().filter(|d| d.start <= s && d.consumed < h) {
            d.consume(&grus, &step.values);
        }
        if s + 1 < h {
            return Ok(None);
        }
        let emitting = &mut self.decoders[(s + 1) % h];
        debug_assert_eq!((emitting.start, emitting.consumed), (s + 1 - h, h));
        let width = emitting.outputs.len() / h;
        let seq = TimestepSequence::new(h, width, std::mem::take(&mut emitting.outputs))?;
        emitting.outputs = Vec::with_capacity(seq.as_slice().len());
        let posterior = model.post_recurrent(self.tail_from, seq)?;
        Ok(Some(StepPosterior { first_step: s + 1 - h, last_step: s, posterior }))
    }
}

/// Batched GRU over overlapping windows.
///
/// Buffers `2h - 1` timesteps, forms the `h` windows of `h` steps they
/// contain and advances all of them together with an `h × d` hidden state.
/// After emitting, the first `h` timesteps are dropped so the next block
/// starts with the window following the last one emitted.
#[derive(Debug, Clone)]
pub struct HyperGru {
    h: usize,
    buffer: VecDeque<Vec<f32>>,
    /// Timestep index of `buffer[0]`.
    base: usize,
    next_step: usize,
    tail_from: usize,
    width: usize,
    hidden: usize,
}

impl HyperGru {
    pub fn new(model: &Model) -> Result<Self> {
        Self::with_steps(model, model.timing().steps)
    }

    /// Uses windows of `h` timesteps instead of the model's own count.
    /// Configs require at least two steps, so this is the only way to run
    /// the degenerate `h = 1` block.
    pub fn with_steps(model: &Model, h: usize) -> Result<Self> {
        let (grus, tail_from) = model.recurrent_layers().ok_or_else(|| Error::Strategy {
            strategy: "hyper",
            reason: "the model has no GRU directly after its front end".into(),
        })?;
        if h == 0 {
            return Err(Error::shape("window must hold at least one timestep"));
        }
        Ok(Self {
            h,
            buffer: VecDeque::with_capacity(2 * h - 1),
            base: 0,
            next_step: 0,
            tail_from,
            width: grus[0].input_dim(),
            hidden: grus.iter().map(|g| g.hidden_dim()).sum(),
        })
    }

    pub fn block_len(&self) -> usize {
        2 * self.h - 1
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Floats held at capacity: the block buffer plus the `h × d` states.
    pub fn state_size(&self) -> usize {
        self.block_len() * self.width + self.h * self.hidden
    }

    pub fn push(&mut self, model: &Model, step: &ConvTimestep) -> Result<Vec<StepPosterior>> {
        if step.index != self.next_step {
            return Err(Error::shape(format!(
                "timestep {} arrived out of order, expected {}",
                step.index, self.next_step
            )));
        }
        self.next_step += 1;
        self.buffer.push_back(step.values.clone());
        if self.buffer.len() < self.block_len() {
            return Ok(Vec::new());
        }
        let out = self.run_block(model, self.h)?;
        self.buffer.drain(..self.h);
        self.base += self.h;
        Ok(out)
    }

    /// Emits the windows still complete in a partial block.
    pub fn flush(&mut self, model: &Model) -> Result<Vec<StepPosterior>> {
        if self.buffer.len() < self.h {
            return Ok(Vec::new());
        }
        let windows = self.buffer.len() - self.h + 1;
        let out = self.run_block(model, windows)?;
        self.buffer.drain(..windows);
        self.base += windows;
        Ok(out)
    }

    fn run_block(&self, model: &Model, windows: usize) -> Result<Vec<StepPosterior>> {
        let h = self.h;
        let (grus, _) = model.recurrent_layers().expect("checked at construction");
        // layer inputs per window, h rows each
        let mut inputs: Vec<Vec<Vec<f32>>> =
            (0..windows).map(|w| (w..w + h).map(|i| self.buffer[i].clone()).collect()).collect();
        for gru in &grus {
            let d = gru.hidden_dim();
            let mut states = vec![0.0f32; windows * d];
            let mut outputs: Vec<Vec<Vec<f32>>> = vec![Vec::with_capacity(h); windows];
            for tau in 0..h {
                let xs: Vec<&[f32]> = inputs.iter().map(|rows| rows[tau].as_slice()).collect();
                gru.step_batch(&xs, &mut states, &mut NoCount);
                for (w, out) in outputs.iter_mut().enumerate() {
                    out.push(states[w * d..(w + 1) * d].to_vec());
                }
            }
            inputs = outputs;
        }
        inputs
            .into_iter()
            .enumerate()
            .map(|(w, rows)| {
                let posterior = model.post_recurrent(self.tail_from, TimestepSequence::from_rows(&rows)?)?;
                let first_step = self.base + w;
                Ok(StepPosterior { first_step, last_step: first_step + h - 1, posterior })
            })
            .collect()
    }
}

/// Keeps the last `h` timesteps and reruns the full tail on each new one.
#[derive(Debug, Clone)]
pub struct WindowTail {
    h: usize,
    width: usize,
    rows: VecDeque<Vec<f32>>,
}

impl WindowTail {
    pub fn new(model: &Model) -> Result<Self> {
        let h = model.timing().steps;
        let shapes = model.config().shapes()?;
        let width = match shapes[model.config().front_len()] {
            crate::arch::Shape::Grid { f, c, .. } => f * c,
            _ => return Err(Error::shape("front end must produce a grid")),
        };
        Ok(Self { h, width, rows: VecDeque::with_capacity(h) })
    }

    pub fn state_size(&self) -> usize {
        self.h * self.width
    }

    pub fn push(&mut self, model: &Model, step: &ConvTimestep) -> Result<Option<StepPosterior>> {
        if self.rows.len() == self.h {
            self.rows.pop_front();
        }
        self.rows.push_back(step.values.clone());
        if self.rows.len() < self.h {
            return Ok(None);
        }
        let seq = TimestepSequence::from_rows(self.rows.make_contiguous())?;
        let posterior = model.tail(seq, &mut NoCount)?;
        Ok(Some(StepPosterior { first_step: step.index + 1 - self.h, last_step: step.index, posterior }))
    }
}
