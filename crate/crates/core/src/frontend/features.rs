use crate::error::{Error, Result};

/// Resolution of the log-energy grid every feature value is snapped to.
///
/// On this grid, adding a (snapped) constant is exact for |x| < 256, so a
/// log-domain gain offset commutes bitwise with frame differencing.
pub const LOG_ENERGY_QUANTUM: f32 = 1.0 / 65536.0;

/// Largest magnitude for which grid values (and sums of them) stay exact.
pub const EXACT_RANGE: f32 = 256.0;

/// Snaps a value onto the log-energy grid. Negative zero becomes positive zero.
#[inline]
pub fn quantize(x: f32) -> f32 {
    (x * 65536.0).round() / 65536.0 + 0.0
}

/// A t×f grid of log-mel energies, stored row-major (one row per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: usize,
    bins: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    /// Builds a matrix, snapping every value onto the log-energy grid.
    pub fn new(frames: usize, bins: usize, mut data: Vec<f32>) -> Result<Self> {
        if frames == 0 || bins == 0 {
            return Err(Error::shape(format!(
                "feature matrix must be non-empty, got {frames}x{bins}"
            )));
        }
        if data.len() != frames * bins {
            return Err(Error::shape(format!(
                "{} values cannot fill {frames}x{bins}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::shape(format!(
                "non-finite feature at frame {}, bin {}",
                i / bins,
                i % bins
            )));
        }
        data.iter_mut().for_each(|v| *v = quantize(*v));
        Ok(Self { frames, bins, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let bins = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != bins) {
            return Err(Error::shape("ragged feature rows"));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), bins, data)
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn num_bins(&self) -> usize {
        self.bins
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.bins..(i + 1) * self.bins]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.bins)
    }

    pub fn get(&self, frame: usize, bin: usize) -> f32 {
        self.data[frame * self.bins + bin]
    }

    /// Copies frames `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.frames {
            return Err(Error::InsufficientFrames {
                got: self.frames.saturating_sub(start),
                need: len.max(1),
            });
        }
        Ok(Self {
            frames: len,
            bins: self.bins,
            data: self.data[start * self.bins..(start + len) * self.bins].to_vec(),
        })
    }

    /// Adds a constant log-energy offset (a gain change in the audio domain).
    ///
    /// The offset is snapped to the grid first; the result is exact, and an
    /// error is returned if any value would leave the exact range.
    pub fn offset(&self, c: f32) -> Result<Self> {
        let c = quantize(c);
        if !c.is_finite() || c.abs() >= EXACT_RANGE {
            return Err(Error::OffsetOutOfRange);
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &v in &self.data {
            let s = v + c;
            if v.abs() >= EXACT_RANGE || s.abs() >= EXACT_RANGE {
                return Err(Error::OffsetOutOfRange);
            }
            data.push(s);
        }
        Ok(Self {
            frames: self.frames,
            bins: self.bins,
            data,
        })
    }
}

/// First difference along time: output frame `i` is `feats[i + 1] - feats[i]`.
pub fn delta_lfbe(feats: &FeatureMatrix) -> Result<FeatureMatrix> {
    if feats.frames < 2 {
        return Err(Error::InsufficientFrames {
            got: feats.frames,
            need: 2,
        });
    }
    let data = feats
        .data
        .windows(2 * feats.bins)
        .step_by(feats.bins)
        .flat_map(|pair| {
            let (prev, next) = pair.split_at(feats.bins);
            next.iter().zip(prev).map(|(n, p)| n - p)
        })
        .collect();
    FeatureMatrix::new(feats.frames - 1, feats.bins, data)
}
