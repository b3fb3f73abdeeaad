//! PCM ingestion and log-mel filterbank energy (LFBE) features.
//!
//! Frames are computed every 10 ms over 25 ms windows of 16 kHz audio.
//! The optional delta transform differences consecutive frames, which
//! cancels any constant log-domain gain offset.

mod audio;
mod features;
mod lfbe;

pub use audio::{AudioBuffer, RawPcmReader, FRAME_MS, HOP_SAMPLES, SAMPLE_RATE, WINDOW_SAMPLES};
pub use features::{delta_lfbe, quantize, FeatureMatrix, EXACT_RANGE, LOG_ENERGY_QUANTUM};
pub use lfbe::{compute_lfbe, frame_count, LfbeExtractor, LfbeStream, ENERGY_FLOOR, FFT_SIZE};
