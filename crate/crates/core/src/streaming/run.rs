use std::io::Read;
use std::sync::Arc;

use super::clock::Clock;
use super::engine::{StreamEngine, StreamPosterior};
use super::tail::Strategy;
use crate::detect::{DetectionEvent, DetectorConfig, StreamDetector};
use crate::error::Result;
use crate::frontend::RawPcmReader;
use crate::model::Model;

/// Everything a stream produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamOutput {
    pub posteriors: Vec<StreamPosterior>,
    pub events: Vec<DetectionEvent>,
}

/// Knobs for [`run_stream`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSettings {
    pub strategy: Strategy,
    pub detector: DetectorConfig,
    /// Samples read from the source per engine call.
    pub chunk_samples: usize,
}

/// Reads raw 16-bit LE mono PCM from `reader` until EOF, streaming it
/// through the engine and detector.
///
/// `on_posterior` and `on_event` see records as soon as they exist, so
/// callers can write them out incrementally.
pub fn run_stream<R: Read, K: Clock>(
    reader: R,
    model: Arc<Model>,
    settings: StreamSettings,
    clock: K,
    mut on_posterior: impl FnMut(&StreamPosterior) -> Result<()>,
    mut on_event: impl FnMut(&DetectionEvent) -> Result<()>,
) -> Result<StreamOutput> {
    let mut engine = StreamEngine::with_clock(model, settings.strategy, clock)?;
    let mut det = StreamDetector::new(settings.detector);
    let mut pcm = RawPcmReader::new(reader);
    let mut out = StreamOutput::default();
    let mut handle = |posteriors: Vec<StreamPosterior>, out: &mut StreamOutput| -> Result<()> {
        for p in posteriors {
            on_posterior(&p)?;
            if let Some(e) = det.push(&p) {
                on_event(&e)?;
                out.events.push(e);
            }
            out.posteriors.push(p);
        }
        Ok(())
    };
    while let Some(chunk) = pcm.next_chunk(settings.chunk_samples.max(1))? {
        let posteriors = engine.push_pcm(&chunk)?;
        handle(posteriors, &mut out)?;
    }
    let tail = engine.finish()?;
    handle(tail, &mut out)?;
    if let Some(e) = det.finish() {
        on_event(&e)?;
        out.events.push(e);
    }
    Ok(out)
}
