use std::sync::Arc;

use super::clock::{Clock, WallClock};
use super::front::{ConvTimestep, StreamingFrontEnd};
use super::tail::{DecoderBank, HyperGru, StepPosterior, Strategy, WindowTail};
use crate::error::{Error, Result};
use crate::frontend::{FeatureMatrix, LfbeStream};
use crate::model::{Model, WindowPosterior};

/// A full-window posterior produced while streaming.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamPosterior {
    /// Last timestep of the window (0-based).
    pub step_index: usize,
    pub first_step: usize,
    /// First and last input frame covered by the window.
    pub first_frame: usize,
    pub last_frame: usize,
    pub posterior: f32,
    /// Clock reading when the posterior became available.
    pub emitted_ms: f64,
}

impl StreamPosterior {
    /// Wraps an offline window posterior; its emission time is the end of
    /// the last audio frame it reads.
    pub fn from_offline(p: &WindowPosterior, stride: usize, steps: usize) -> Self {
        debug_assert_eq!(p.first_frame, p.first_step * stride);
        Self {
            step_index: p.first_step + steps - 1,
            first_step: p.first_step,
            first_frame: p.first_frame,
            last_frame: p.last_frame,
            posterior: p.posterior,
            emitted_ms: 10.0 * p.last_frame as f64 + 25.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Tail {
    Bank(DecoderBank),
    Hyper(HyperGru),
    Window(WindowTail),
}

/// Streaming inference over unbounded audio with bounded state.
///
/// PCM goes through the incremental LFBE extractor, the row-wise front end
/// and the chosen tail strategy. Output is independent of how the input is
/// chunked.
#[derive(Debug)]
pub struct StreamEngine<K: Clock = WallClock> {
    model: Arc<Model>,
    lfbe: LfbeStream,
    front: StreamingFrontEnd,
    tail: Tail,
    strategy: Strategy,
    clock: K,
    frames_in: usize,
}

impl StreamEngine<WallClock> {
    pub fn new(model: Arc<Model>, strategy: Strategy) -> Result<Self> {
        Self::with_clock(model, strategy, WallClock::new())
    }
}

impl<K: Clock> StreamEngine<K> {
    pub fn with_clock(model: Arc<Model>, strategy: Strategy, clock: K) -> Result<Self> {
        let tail = match strategy {
            Strategy::Bank => Tail::Bank(DecoderBank::new(&model)?),
            Strategy::Hyper => Tail::Hyper(HyperGru::new(&model)?),
            Strategy::Window => Tail::Window(WindowTail::new(&model)?),
        };
        Ok(Self {
            lfbe: LfbeStream::new(model.bins())?,
            front: StreamingFrontEnd::new(&model)?,
            tail,
            strategy,
            clock,
            frames_in: 0,
            model,
        })
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn clock(&self) -> &K {
        &self.clock
    }

    /// Feature frames consumed so far.
    pub fn frames_in(&self) -> usize {
        self.frames_in
    }

    /// Floats of state carried between calls. Constant once the first
    /// window is complete.
    pub fn state_size(&self) -> usize {
        let tail = match &self.tail {
            Tail::Bank(b) => b.state_size(),
            Tail::Hyper(h) => h.state_size(),
            Tail::Window(w) => w.state_size(),
        };
        self.front.state_size() + tail + crate::frontend::WINDOW_SAMPLES
    }

    pub fn push_pcm(&mut self, samples: &[i16]) -> Result<Vec<StreamPosterior>> {
        let mut out = Vec::new();
        for frame in self.lfbe.push(samples) {
            out.extend(self.push_frame(&frame)?);
        }
        Ok(out)
    }

    /// Feeds already-computed feature frames (bypassing the LFBE stage).
    pub fn push_features(&mut self, features: &FeatureMatrix) -> Result<Vec<StreamPosterior>> {
        let mut out = Vec::new();
        for row in features.rows() {
            out.extend(self.push_frame(row)?);
        }
        Ok(out)
    }

    pub fn push_frame(&mut self, frame: &[f32]) -> Result<Vec<StreamPosterior>> {
        self.frames_in += 1;
        let steps = self.front.push(&self.model, frame)?;
        let mut out = Vec::new();
        for step in &steps {
            out.extend(self.push_step(step)?);
        }
        Ok(out)
    }

    fn push_step(&mut self, step: &ConvTimestep) -> Result<Vec<StreamPosterior>> {
        let raw = match &mut self.tail {
            Tail::Bank(b) => b.push(&self.model, step)?.into_iter().collect(),
            Tail::Hyper(h) => h.push(&self.model, step)?,
            Tail::Window(w) => w.push(&self.model, step)?.into_iter().collect(),
        };
        Ok(self.stamp(raw))
    }

    /// Ends the stream, emitting any windows held in a partial block.
    pub fn finish(&mut self) -> Result<Vec<StreamPosterior>> {
        let raw = match &mut self.tail {
            Tail::Hyper(h) => h.flush(&self.model)?,
            _ => Vec::new(),
        };
        Ok(self.stamp(raw))
    }

    fn stamp(&self, raw: Vec<StepPosterior>) -> Vec<StreamPosterior> {
        let now = self.clock.now_ms();
        let timing = self.model.timing();
        let span = self.model.span();
        raw.into_iter()
            .map(|p| {
                let first_frame = p.first_step * timing.stride;
                StreamPosterior {
                    step_index: p.last_step,
                    first_step: p.first_step,
                    first_frame,
                    last_frame: first_frame + span - 1,
                    posterior: p.posterior,
                    emitted_ms: now,
                }
            })
            .collect()
    }
}

/// Streams a whole buffer in chunks of `chunk` samples and returns every
/// posterior, including those flushed at the end.
pub fn stream_samples(model: Arc<Model>, strategy: Strategy, samples: &[i16], chunk: usize) -> Result<Vec<StreamPosterior>> {
    if chunk == 0 {
        return Err(Error::shape("chunk size must be positive"));
    }
    let mut engine = StreamEngine::new(model, strategy)?;
    let mut out = Vec::new();
    for c in samples.chunks(chunk) {
        out.extend(engine.push_pcm(c)?);
    }
    out.extend(engine.finish()?);
    Ok(out)
}
