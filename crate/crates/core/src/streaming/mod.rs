//! Streaming inference: row-wise front end and the recurrent tail
//! strategies.

mod clock;
mod engine;
mod front;
mod run;
mod tail;

pub use clock::{Clock, ManualClock, WallClock};
pub use engine::{stream_samples, StreamEngine, StreamPosterior};
pub use front::{ConvRingBuffer, ConvTimestep, StreamingFrontEnd};
pub use run::{run_stream, StreamOutput, StreamSettings};
pub use tail::{DecoderBank, HyperGru, StepPosterior, Strategy, WindowTail};
