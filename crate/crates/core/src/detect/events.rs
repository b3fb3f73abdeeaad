use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streaming::StreamPosterior;

/// Milliseconds per feature frame (the hop).
pub const FRAME_MS: f64 = 10.0;

/// Threshold detector with hangover and a release level.
///
/// An event opens at the first posterior `>= threshold` and stays open
/// until `hangover_steps` consecutive posteriors fall below `release`.
/// With `release == threshold` this is the plain single-threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub threshold: f32,
    pub hangover_steps: usize,
    pub release: f32,
}

impl DetectorConfig {
    pub fn new(threshold: f32, hangover_steps: usize) -> Result<Self> {
        Self::with_release(threshold, hangover_steps, threshold)
    }

    pub fn with_release(threshold: f32, hangover_steps: usize, release: f32) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Detector(format!("threshold {threshold} outside (0, 1)")));
        }
        if hangover_steps == 0 {
            return Err(Error::Detector("hangover must be at least one step".into()));
        }
        if !(release > 0.0 && release <= threshold) {
            return Err(Error::Detector(format!("release {release} must lie in (0, {threshold}]")));
        }
        Ok(Self { threshold, hangover_steps, release })
    }
}

/// A detected keyword occurrence, located by its peak-posterior window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub start_frame: usize,
    pub end_frame: usize,
    pub peak_posterior: f32,
    pub peak_step: usize,
    /// Wall-clock time at which the peak posterior was produced.
    pub detect_wall_ms: f64,
    /// Audio time of `end_frame`.
    pub end_audio_ms: f64,
}

impl DetectionEvent {
    pub fn start_ms(&self) -> f64 {
        self.start_frame as f64 * FRAME_MS
    }

    pub fn end_ms(&self) -> f64 {
        self.end_frame as f64 * FRAME_MS
    }

    fn from_peak(p: &StreamPosterior) -> Self {
        Self {
            start_frame: p.first_frame,
            end_frame: p.last_frame,
            peak_posterior: p.posterior,
            peak_step: p.step_index,
            detect_wall_ms: p.emitted_ms,
            end_audio_ms: p.last_frame as f64 * FRAME_MS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Open {
    peak: StreamPosterior,
    below: usize,
}

/// Incremental form of [`detect`].
#[derive(Debug, Clone)]
pub struct StreamDetector {
    config: DetectorConfig,
    open: Option<Open>,
}

impl StreamDetector {
    pub fn new(config: DetectorConfig) -> Self {
        Self { config, open: None }
    }

    pub fn config(&self) -> DetectorConfig {
        self.config
    }

    /// Consumes one posterior; returns an event when one closes.
    pub fn push(&mut self, p: &StreamPosterior) -> Option<DetectionEvent> {
        let c = self.config;
        match &mut self.open {
            None => {
                if p.posterior >= c.threshold {
                    self.open = Some(Open { peak: *p, below: 0 });
                }
                None
            }
            Some(open) => {
                if p.posterior >= c.release {
                    open.below = 0;
                    if p.posterior > open.peak.posterior {
                        open.peak = *p;
                    }
                    None
                } else {
                    open.below += 1;
                    if open.below >= c.hangover_steps {
                        let peak = open.peak;
                        self.open = None;
                        Some(DetectionEvent::from_peak(&peak))
                    } else {
                        None
                    }
                }
            }
        }
    }

    /// Closes an event left open at the end of the stream.
    pub fn finish(&mut self) -> Option<DetectionEvent> {
        self.open.take().map(|o| DetectionEvent::from_peak(&o.peak))
    }
}

/// Runs the detector over a complete trace.
pub fn detect(trace: &[StreamPosterior], config: DetectorConfig) -> Vec<DetectionEvent> {
    let mut d = StreamDetector::new(config);
    let mut events: Vec<DetectionEvent> = trace.iter().filter_map(|p| d.push(p)).collect();
    events.extend(d.finish());
    events
}

/// `detect_wall_ms - end_audio_ms + baseline_ms`.
pub fn latency(event: &DetectionEvent, baseline_ms: f64) -> Result<f64> {
    if !event.end_audio_ms.is_finite() || event.end_audio_ms < 0.0 {
        return Err(Error::Clock(format!("audio time {} ms is not a valid timestamp", event.end_audio_ms)));
    }
    if !event.detect_wall_ms.is_finite() {
        return Err(Error::Clock("wall-clock time is not finite".into()));
    }
    Ok(event.detect_wall_ms - event.end_audio_ms + baseline_ms)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Trace for a model with stride 8 and a 100-frame span.
    pub(crate) fn trace(values: &[f32]) -> Vec<StreamPosterior> {
        values
            .iter()
            .enumerate()
            .map(|(i, &posterior)| StreamPosterior {
                step_index: i + 9,
                first_step: i,
                first_frame: 8 * i,
                last_frame: 8 * i + 99,
                posterior,
                emitted_ms: (8 * i + 99) as f64 * 10.0 + 25.0,
            })
            .collect()
    }

    #[test]
    fn quiet_trace_has_no_events() {
        let cfg = DetectorConfig::new(0.5, 2).unwrap();
        assert!(detect(&trace(&[0.1, 0.2, 0.49]), cfg).is_empty());
    }

    #[test]
    fn single_step_event() {
        let cfg = DetectorConfig::new(0.5, 2).unwrap();
        let e = detect(&trace(&[0.9]), cfg);
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].start_frame, e[0].end_frame), (0, 99));
        assert_eq!(e[0].end_audio_ms, 990.0);
    }

    #[test]
    fn two_humps() {
        let cfg = DetectorConfig::new(0.5, 2).unwrap();
        let e = detect(&trace(&[0.1, 0.6, 0.8, 0.7, 0.2, 0.1, 0.0, 0.55, 0.95, 0.3, 0.1]), cfg);
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].peak_step, e[0].start_frame, e[0].peak_posterior), (2 + 9, 16, 0.8));
        assert_eq!((e[1].peak_step, e[1].start_frame), (8 + 9, 64));
    }

    #[test]
    fn hangover_bridges_short_dips() {
        let cfg = DetectorConfig::new(0.5, 3).unwrap();
        assert_eq!(detect(&trace(&[0.9, 0.1, 0.1, 0.9, 0.1, 0.1, 0.1]), cfg).len(), 1);
        let cfg = DetectorConfig::new(0.5, 2).unwrap();
        assert_eq!(detect(&trace(&[0.9, 0.1, 0.1, 0.9, 0.1, 0.1, 0.1]), cfg).len(), 2);
    }

    #[test]
    fn plain_threshold_rule_is_not_monotone() {
        // one run at 0.5 splits into two at 0.7
        let t = trace(&[0.9, 0.6, 0.9, 0.1]);
        assert_eq!(detect(&t, DetectorConfig::new(0.5, 1).unwrap()).len(), 1);
        assert_eq!(detect(&t, DetectorConfig::new(0.7, 1).unwrap()).len(), 2);
        // a fixed release level restores monotonicity
        assert_eq!(detect(&t, DetectorConfig::with_release(0.7, 1, 0.5).unwrap()).len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::new(0.0, 1).is_err());
        assert!(DetectorConfig::new(1.0, 1).is_err());
        assert!(DetectorConfig::new(0.5, 0).is_err());
        assert!(DetectorConfig::with_release(0.5, 1, 0.6).is_err());
    }

    #[test]
    fn latency_examples() {
        let mut e = detect(&trace(&[0.9]), DetectorConfig::new(0.5, 1).unwrap())[0];
        e.detect_wall_ms = 1000.0;
        e.end_audio_ms = 800.0;
        assert_eq!(latency(&e, 0.0).unwrap(), 200.0);
        e.detect_wall_ms = 168.0;
        e.end_audio_ms = 0.0;
        assert_eq!(latency(&e, 50.0).unwrap(), 218.0);
        e.end_audio_ms = -1.0;
        assert!(matches!(latency(&e, 0.0), Err(Error::Clock(_))));
    }

    proptest! {
        #[test]
        fn events_never_increase_with_threshold(
            values in prop::collection::vec(0.0f32..1.0, 0..60),
            hangover in 1usize..4,
            a in 0.3f32..0.99, b in 0.3f32..0.99,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let t = trace(&values);
            let release = 0.3;
            let n_lo = detect(&t, DetectorConfig::with_release(lo, hangover, release).unwrap()).len();
            let n_hi = detect(&t, DetectorConfig::with_release(hi, hangover, release).unwrap()).len();
            prop_assert!(n_hi <= n_lo);
        }

        #[test]
        fn chunked_detection_matches_batch(values in prop::collection::vec(0.0f32..1.0, 0..60), split in 0usize..60) {
            let t = trace(&values);
            let cfg = DetectorConfig::new(0.6, 2).unwrap();
            let split = split.min(t.len());
            let mut d = StreamDetector::new(cfg);
            let mut got: Vec<_> = t[..split].iter().filter_map(|p| d.push(p)).collect();
            got.extend(t[split..].iter().filter_map(|p| d.push(p)));
            got.extend(d.finish());
            prop_assert_eq!(got, detect(&t, cfg));
        }

        #[test]
        fn peaks_clear_the_threshold(values in prop::collection::vec(0.0f32..1.0, 0..60)) {
            for e in detect(&trace(&values), DetectorConfig::new(0.6, 2).unwrap()) {
                prop_assert!(e.peak_posterior >= 0.6);
                prop_assert!(e.start_frame < e.end_frame);
            }
        }
    }
}
