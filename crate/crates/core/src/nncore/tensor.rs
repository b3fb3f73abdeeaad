use crate::error::{Error, Result};

/// Row-major (time, freq, channel) activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f32>,
}

impl Tensor3 {
    pub fn new(dims: (usize, usize, usize), data: Vec<f32>) -> Result<Self> {
        if data.len() != dims.0 * dims.1 * dims.2 {
            return Err(Error::shape(format!(
                "{} values cannot fill {}x{}x{}",
                data.len(),
                dims.0,
                dims.1,
                dims.2
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.0 * dims.1 * dims.2],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, t: usize, f: usize, c: usize) -> f32 {
        let (_, nf, nc) = self.dims;
        self.data[(t * nf + f) * nc + c]
    }

    /// One time slice, `freq * channels` values.
    pub fn time_row(&self, t: usize) -> &[f32] {
        let w = self.dims.1 * self.dims.2;
        &self.data[t * w..(t + 1) * w]
    }

    /// Flattens the last two dims, keeping time.
    pub fn flatten(self) -> TimestepSequence {
        let (t, f, c) = self.dims;
        TimestepSequence {
            steps: t,
            width: f * c,
            data: self.data,
        }
    }
}

/// A t'×n matrix: one n-wide vector per timestep, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepSequence {
    steps: usize,
    width: usize,
    data: Vec<f32>,
}

impl TimestepSequence {
    pub fn new(steps: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != steps * width {
            return Err(Error::shape(format!(
                "{} values cannot fill {steps} steps of width {width}",
                data.len()
            )));
        }
        Ok(Self { steps, width, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::shape("ragged timestep rows"));
        }
        Ok(Self {
            steps: rows.len(),
            width,
            data: rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect(),
        })
    }

    pub fn zeros(steps: usize, width: usize) -> Self {
        Self {
            steps,
            width,
            data: vec![0.0; steps * width],
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        // chunks_exact panics on a zero width
        self.data.chunks_exact(self.width.max(1)).take(self.steps)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn last(&self) -> Option<&[f32]> {
        self.steps.checked_sub(1).map(|i| self.row(i))
    }

    /// Sums over time.
    pub fn sum_over_time(&self) -> Vec<f32> {
        let mut acc = vec![0.0; self.width];
        for row in self.rows() {
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        acc
    }
}
