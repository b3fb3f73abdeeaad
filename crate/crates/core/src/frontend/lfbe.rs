use std::sync::Arc;

use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

use super::audio::{AudioBuffer, HOP_SAMPLES, SAMPLE_RATE, WINDOW_SAMPLES};
use super::features::{quantize, FeatureMatrix};
use crate::error::{Error, Result};

pub const FFT_SIZE: usize = 512;
/// Floor applied to filterbank energies before the logarithm.
pub const ENERGY_FLOOR: f32 = 1e-10;
const MAX_HZ: f64 = 8000.0;

/// Number of frames produced from `len` samples (zero below one window).
pub fn frame_count(len: usize) -> usize {
    if len < WINDOW_SAMPLES {
        0
    } else {
        (len - WINDOW_SAMPLES) / HOP_SAMPLES + 1
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters evenly spaced on the HTK mel scale over 0–8 kHz.
#[derive(Debug, Clone)]
struct MelFilterbank {
    /// (first FFT bin, weights) per filter.
    filters: Vec<(usize, Vec<f32>)>,
}

impl MelFilterbank {
    fn new(num_filters: usize) -> Self {
        let top = hz_to_mel(MAX_HZ);
        let edges: Vec<f64> = (0..num_filters + 2)
            .map(|i| mel_to_hz(top * i as f64 / (num_filters + 1) as f64))
            .collect();
        let bin_hz = f64::from(SAMPLE_RATE) / FFT_SIZE as f64;
        let filters = edges
            .windows(3)
            .map(|e| {
                let (lo, mid, hi) = (e[0], e[1], e[2]);
                let first = (lo / bin_hz).floor() as usize;
                let last = ((hi / bin_hz).ceil() as usize).min(FFT_SIZE / 2);
                let weights = (first..=last)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        };
                        w as f32
                    })
                    .collect();
                (first, weights)
            })
            .collect();
        Self { filters }
    }
}

/// Log-mel filterbank energy extractor: 400-sample Hann window, 512-point
/// FFT, power spectrum, triangular mel filters, log with an energy floor.
#[derive(Clone)]
pub struct LfbeExtractor {
    num_bins: usize,
    window: Vec<f32>,
    mel: MelFilterbank,
    fft: Arc<dyn Fft<f32>>,
}

impl std::fmt::Debug for LfbeExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LfbeExtractor")
            .field("num_bins", &self.num_bins)
            .finish_non_exhaustive()
    }
}

impl LfbeExtractor {
    pub fn new(num_bins: usize) -> Result<Self> {
        if num_bins == 0 {
            return Err(Error::shape("num_bins must be at least 1"));
        }
        let n = WINDOW_SAMPLES as f64;
        let window = (0..WINDOW_SAMPLES)
            .map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n).cos()) as f32)
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(FFT_SIZE);
        Ok(Self {
            num_bins,
            window,
            mel: MelFilterbank::new(num_bins),
            fft,
        })
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    /// Computes one frame from exactly one window of samples.
    pub fn frame(&self, samples: &[i16], out: &mut [f32]) {
        debug_assert_eq!(samples.len(), WINDOW_SAMPLES);
        debug_assert_eq!(out.len(), self.num_bins);
        let mut buf = vec![Complex32::new(0.0, 0.0); FFT_SIZE];
        for ((b, &s), &w) in buf.iter_mut().zip(samples).zip(&self.window) {
            b.re = f32::from(s) / 32768.0 * w;
        }
        self.fft.process(&mut buf);
        let power: Vec<f32> = buf[..=FFT_SIZE / 2].iter().map(|c| c.norm_sqr()).collect();
        for (o, (first, weights)) in out.iter_mut().zip(&self.mel.filters) {
            let energy: f32 = weights
                .iter()
                .zip(&power[*first..])
                .map(|(w, p)| w * p)
                .sum();
            *o = quantize(energy.max(ENERGY_FLOOR).ln());
        }
    }

    pub fn compute(&self, audio: &AudioBuffer) -> Result<FeatureMatrix> {
        let samples = audio.samples();
        let frames = frame_count(samples.len());
        if frames == 0 {
            return Err(Error::EmptyInput {
                got: samples.len(),
                need: WINDOW_SAMPLES,
            });
        }
        let mut data = vec![0.0; frames * self.num_bins];
        for (i, out) in data.chunks_exact_mut(self.num_bins).enumerate() {
            let start = i * HOP_SAMPLES;
            self.frame(&samples[start..start + WINDOW_SAMPLES], out);
        }
        FeatureMatrix::new(frames, self.num_bins, data)
    }
}

/// Offline LFBE extraction over a whole buffer.
pub fn compute_lfbe(audio: &AudioBuffer, num_bins: usize) -> Result<FeatureMatrix> {
    if audio.sample_rate() != SAMPLE_RATE {
        return Err(Error::UnsupportedRate(audio.sample_rate()));
    }
    LfbeExtractor::new(num_bins)?.compute(audio)
}

/// Streaming LFBE: accepts PCM in arbitrary chunks and yields frames
/// bitwise-identical to [`compute_lfbe`] over the concatenated audio.
#[derive(Debug, Clone)]
pub struct LfbeStream {
    extractor: LfbeExtractor,
    pending: Vec<i16>,
    frames_out: usize,
}

impl LfbeStream {
    pub fn new(num_bins: usize) -> Result<Self> {
        Ok(Self {
            extractor: LfbeExtractor::new(num_bins)?,
            pending: Vec::with_capacity(WINDOW_SAMPLES + HOP_SAMPLES),
            frames_out: 0,
        })
    }

    pub fn frames_emitted(&self) -> usize {
        self.frames_out
    }

    /// Appends samples and returns every newly completed frame.
    pub fn push(&mut self, samples: &[i16]) -> Vec<Vec<f32>> {
        let mut out = Vec::new();
        for chunk in samples.chunks(HOP_SAMPLES) {
            self.pending.extend_from_slice(chunk);
            while self.pending.len() >= WINDOW_SAMPLES {
                let mut row = vec![0.0; self.extractor.num_bins()];
                self.extractor.frame(&self.pending[..WINDOW_SAMPLES], &mut row);
                self.pending.drain(..HOP_SAMPLES);
                self.frames_out += 1;
                out.push(row);
            }
        }
        out
    }
}
