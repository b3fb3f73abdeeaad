use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{Label, Manifest};
use super::metrics::{det_sweep, fa_at_mr, OperatingPoint, ScoreSet};
use crate::detect::{detect, endpoint_delta, DetectionEvent, DetectorConfig, EndpointStats};
use crate::error::{Error, Result};
use crate::frontend::{compute_lfbe, AudioBuffer, HOP_SAMPLES, WINDOW_SAMPLES};
use crate::model::{Model, WindowPosterior};
use crate::streaming::StreamPosterior;

/// Outcome for one manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryScore {
    pub path: PathBuf,
    pub label: Label,
    /// Maximum window posterior, or `None` if the entry failed.
    pub score: Option<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub scores: ScoreSet,
    pub entries: Vec<EntryScore>,
    pub failures: usize,
}

/// Offline window posteriors for a whole utterance. Audio shorter than one
/// model window is padded with trailing silence.
pub fn utterance_posteriors(model: &Model, audio: &AudioBuffer) -> Result<Vec<WindowPosterior>> {
    let need = WINDOW_SAMPLES + (model.span() - 1) * HOP_SAMPLES;
    let feats = if audio.len() < need {
        let mut samples = audio.samples().to_vec();
        samples.resize(need, 0);
        compute_lfbe(&AudioBuffer::from_samples(samples), model.bins())?
    } else {
        compute_lfbe(audio, model.bins())?
    };
    model.infer_windows(&feats)
}

/// Max posterior over all windows of an utterance.
pub fn score_utterance(model: &Model, audio: &AudioBuffer) -> Result<f32> {
    Ok(utterance_posteriors(model, audio)?.iter().map(|p| p.posterior).fold(0.0, f32::max))
}

/// Scores every entry in parallel, keeping manifest order. Failed entries
/// are recorded; more than 10% failures aborts the run.
pub fn score_dataset(model: &Model, manifest: &Manifest) -> Result<ScoreReport> {
    let entries: Vec<EntryScore> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let result = AudioBuffer::read_wav(&e.path).and_then(|audio| score_utterance(model, &audio));
            let (score, error) = match result {
                Ok(s) => (Some(s), None),
                Err(err) => (None, Some(err.to_string())),
            };
            EntryScore { path: e.path.clone(), label: e.label, score, error }
        })
        .collect();
    let failures = entries.iter().filter(|e| e.score.is_none()).count();
    if failures * 10 > entries.len() {
        return Err(Error::TooManyFailures { failed: failures, total: entries.len() });
    }
    let pick = |label| entries.iter().filter(|e| e.label == label).filter_map(|e| e.score).collect();
    let scores = ScoreSet::new(pick(Label::Positive), pick(Label::Negative))?;
    Ok(ScoreReport { scores, entries, failures })
}

/// Settings for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub miss_rate: f64,
    pub sweep_points: usize,
    /// Detector used for endpoint deviations on referenced positives.
    pub detector: DetectorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub utterances: usize,
    pub failures: usize,
    pub operating_point: Option<OperatingPoint>,
    pub sweep: Vec<OperatingPoint>,
    pub endpoints: Option<EndpointStats>,
}

/// Scores a manifest and reports FAs at the target miss rate, a DET sweep
/// and endpoint deviations for positives with reference endpoints.
pub fn evaluate(model: &Model, manifest: &Manifest, config: EvalConfig) -> Result<EvalReport> {
    let report = score_dataset(model, manifest)?;
    let has_pos = !report.scores.positives.is_empty();
    let operating_point = if has_pos { Some(fa_at_mr(&report.scores, config.miss_rate)?) } else { None };
    let sweep = if has_pos { det_sweep(&report.scores, config.sweep_points)? } else { Vec::new() };

    let timing = model.timing();
    let per_entry: Vec<(Vec<DetectionEvent>, Option<crate::detect::EndpointRef>)> = manifest
        .entries
        .par_iter()
        .zip(&report.entries)
        .filter(|(e, s)| e.label == Label::Positive && e.reference().is_some() && s.score.is_some())
        .map(|(e, _)| {
            let audio = AudioBuffer::read_wav(&e.path)?;
            let trace: Vec<StreamPosterior> = utterance_posteriors(model, &audio)?
                .iter()
                .map(|p| StreamPosterior::from_offline(p, timing.stride, timing.steps))
                .collect();
            // the strongest event per utterance is compared against its reference
            let best = detect(&trace, config.detector)
                .into_iter()
                .max_by(|a, b| a.peak_posterior.total_cmp(&b.peak_posterior));
            Ok((best.into_iter().collect(), e.reference()))
        })
        .collect::<Result<_>>()?;
    let (mut n, mut missed, mut ds, mut de) = (0usize, 0usize, 0.0, 0.0);
    for (events, reference) in &per_entry {
        let reference = reference.expect("filtered");
        match endpoint_delta(events, &[reference]) {
            Ok(s) => {
                n += 1;
                ds += s.mean_start_ms;
                de += s.mean_end_ms;
            }
            Err(Error::UndefinedMean) => missed += 1,
            Err(e) => return Err(e),
        }
    }
    let endpoints = (n > 0).then(|| EndpointStats {
        matched: n,
        missed,
        unmatched_events: 0,
        mean_start_ms: ds / n as f64,
        mean_end_ms: de / n as f64,
    });
    Ok(EvalReport { utterances: manifest.len(), failures: report.failures, operating_point, sweep, endpoints })
}
