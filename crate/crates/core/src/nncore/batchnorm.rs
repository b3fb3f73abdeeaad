use crate::error::{Error, Result};

/// Inference-form batch normalization over the last (channel) axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    gamma: Vec<f32>,
    beta: Vec<f32>,
    mean: Vec<f32>,
    var: Vec<f32>,
    eps: f32,
}

impl BatchNorm {
    pub fn new(gamma: Vec<f32>, beta: Vec<f32>, mean: Vec<f32>, var: Vec<f32>, eps: f32) -> Result<Self> {
        let n = gamma.len();
        if n == 0 || beta.len() != n || mean.len() != n || var.len() != n {
            return Err(Error::shape(format!(
                "batch-norm statistics disagree in length: gamma {n}, beta {}, mean {}, var {}",
                beta.len(),
                mean.len(),
                var.len()
            )));
        }
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::InvalidStats(format!("eps {eps} must be non-negative")));
        }
        if let Some((i, v)) = var.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0 || **v + eps <= 0.0) {
            return Err(Error::InvalidStats(format!(
                "channel {i}: variance {v} with eps {eps}"
            )));
        }
        Ok(Self { gamma, beta, mean, var, eps })
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f32] {
        &self.gamma
    }

    pub fn beta(&self) -> &[f32] {
        &self.beta
    }

    pub fn mean(&self) -> &[f32] {
        &self.mean
    }

    pub fn var(&self) -> &[f32] {
        &self.var
    }

    pub fn eps(&self) -> f32 {
        self.eps
    }

    /// Normalizes in place; `x.len()` must be a multiple of the channel count.
    pub fn apply(&self, x: &mut [f32]) {
        debug_assert_eq!(x.len() % self.channels(), 0);
        for chunk in x.chunks_exact_mut(self.channels()) {
            for (c, v) in chunk.iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / (self.var[c] + self.eps).sqrt() * self.gamma[c] + self.beta[c];
            }
        }
    }
}

/// `(x - mean) / sqrt(var + eps) * gamma + beta`, channels last.
pub fn batchnorm_inference(
    x: &[f32],
    mean: &[f32],
    var: &[f32],
    gamma: &[f32],
    beta: &[f32],
    eps: f32,
) -> Result<Vec<f32>> {
    let bn = BatchNorm::new(gamma.to_vec(), beta.to_vec(), mean.to_vec(), var.to_vec(), eps)?;
    if !x.len().is_multiple_of(bn.channels()) {
        return Err(Error::shape(format!(
            "{} values are not a whole number of {}-channel groups",
            x.len(),
            bn.channels()
        )));
    }
    let mut out = x.to_vec();
    bn.apply(&mut out);
    Ok(out)
}
