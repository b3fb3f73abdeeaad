//! Posterior traces to detection events, endpoint deviations and latency.

mod endpoints;
mod events;

pub use endpoints::{endpoint_delta, match_endpoints, EndpointRef, EndpointStats};
pub use events::{detect, latency, DetectionEvent, DetectorConfig, StreamDetector, FRAME_MS};
