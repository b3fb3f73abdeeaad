//! Dataset scoring, false accepts at a fixed miss rate and DET sweeps.

mod manifest;
mod metrics;
mod score;

pub use manifest::{Label, Manifest, ManifestEntry};
pub use metrics::{det_sweep, fa_at_mr, OperatingPoint, ScoreSet};
pub use score::{
    evaluate, score_dataset, score_utterance, utterance_posteriors, EntryScore, EvalConfig, EvalReport, ScoreReport,
};
