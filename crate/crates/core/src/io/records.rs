//! Text and binary records for posterior traces and detection events.
//!
//! A trace line is `step_index,first_frame,last_frame,posterior`, with the
//! posterior printed in shortest round-trip form so it parses back to the
//! same f32. The binary trace is the bare sequence of posteriors as f32 LE.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::detect::{latency, DetectionEvent};
use crate::error::{Error, Result};
use crate::streaming::StreamPosterior;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub step_index: usize,
    pub first_frame: usize,
    pub last_frame: usize,
    pub posterior: f32,
}

impl From<&StreamPosterior> for TraceRecord {
    fn from(p: &StreamPosterior) -> Self {
        Self { step_index: p.step_index, first_frame: p.first_frame, last_frame: p.last_frame, posterior: p.posterior }
    }
}

impl std::fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{},{}", self.step_index, self.first_frame, self.last_frame, self.posterior)
    }
}

impl std::str::FromStr for TraceRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::shape(format!("malformed trace record `{line}`"));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [a, b, c, d] = fields.as_slice() else { return Err(bad()) };
        Ok(Self {
            step_index: a.parse().map_err(|_| bad())?,
            first_frame: b.parse().map_err(|_| bad())?,
            last_frame: c.parse().map_err(|_| bad())?,
            posterior: d.parse().map_err(|_| bad())?,
        })
    }
}

pub fn write_trace<W: Write>(out: &mut W, trace: &[StreamPosterior]) -> Result<()> {
    for p in trace {
        writeln!(out, "{}", TraceRecord::from(p))?;
    }
    Ok(())
}

pub fn read_trace(text: &str) -> Result<Vec<TraceRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(str::parse).collect()
}

pub fn write_binary_trace<W: Write>(out: &mut W, trace: &[StreamPosterior]) -> Result<()> {
    for p in trace {
        out.write_all(&p.posterior.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary_trace(bytes: &[u8]) -> Result<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::shape(format!("binary trace of {} bytes is not a whole number of f32s", bytes.len())));
    }
    Ok(bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect())
}

/// One JSON line per detection event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub start_ms: f64,
    pub end_ms: f64,
    pub peak: f32,
    pub latency_ms: f64,
}

impl EventRecord {
    pub fn new(event: &DetectionEvent, baseline_ms: f64) -> Result<Self> {
        Ok(Self {
            start_ms: event.start_ms(),
            end_ms: event.end_ms(),
            peak: event.peak_posterior,
            latency_ms: latency(event, baseline_ms)?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
