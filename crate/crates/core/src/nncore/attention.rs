use serde::{Deserialize, Serialize};

use super::counter::{MacCounter, NoCount};
use super::dense::Dense;
use super::tensor::TimestepSequence;
use crate::error::{Error, Result};

/// Divisor applied to `QKᵀ` before the softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionScale {
    /// Divide by `d_K`.
    #[default]
    Dk,
    /// Divide by `√d_K`, the usual transformer convention.
    SqrtDk,
}

impl AttentionScale {
    pub fn divisor(self, dim: usize) -> f32 {
        match self {
            AttentionScale::Dk => dim as f32,
            AttentionScale::SqrtDk => (dim as f32).sqrt(),
        }
    }
}

/// Key/query/value projections of a `d`-wide scaled dot-product attention
/// block. Each map is `d×d` (out×in) plus a `d` bias.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    dim: usize,
    wq: Vec<f32>,
    bq: Vec<f32>,
    wk: Vec<f32>,
    bk: Vec<f32>,
    wv: Vec<f32>,
    bv: Vec<f32>,
    scale: AttentionScale,
}

/// Which projection a tensor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Query,
    Key,
    Value,
}

impl AttentionParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        wq: Vec<f32>,
        bq: Vec<f32>,
        wk: Vec<f32>,
        bk: Vec<f32>,
        wv: Vec<f32>,
        bv: Vec<f32>,
        scale: AttentionScale,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::shape("attention dim must be positive"));
        }
        for (name, w, b) in [("query", &wq, &bq), ("key", &wk, &bk), ("value", &wv, &bv)] {
            if w.len() != dim * dim || b.len() != dim {
                return Err(Error::shape(format!(
                    "attention {name} map: got {} weights and {} biases for d={dim}",
                    w.len(),
                    b.len()
                )));
            }
        }
        Ok(Self { dim, wq, bq, wk, bk, wv, bv, scale })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> AttentionScale {
        self.scale
    }

    pub fn weights(&self, p: Projection) -> (&[f32], &[f32]) {
        match p {
            Projection::Query => (&self.wq, &self.bq),
            Projection::Key => (&self.wk, &self.bk),
            Projection::Value => (&self.wv, &self.bv),
        }
    }

    pub fn weights_mut(&mut self, p: Projection) -> (&mut Vec<f32>, &mut Vec<f32>) {
        match p {
            Projection::Query => (&mut self.wq, &mut self.bq),
            Projection::Key => (&mut self.wk, &mut self.bk),
            Projection::Value => (&mut self.wv, &mut self.bv),
        }
    }

    fn project<C: MacCounter>(&self, p: Projection, l: &TimestepSequence, counter: &mut C) -> TimestepSequence {
        let (w, b) = self.weights(p);
        let d = self.dim;
        let mut out = TimestepSequence::zeros(l.steps(), d);
        for (t, x) in l.rows().enumerate() {
            for ((o, row), &bias) in out.row_mut(t).iter_mut().zip(w.chunks_exact(d)).zip(b) {
                let mut acc = bias;
                for (wi, xi) in row.iter().zip(x) {
                    acc += wi * xi;
                    counter.tick();
                }
                *o = acc;
            }
        }
        out
    }

    fn check(&self, l: &TimestepSequence) -> Result<()> {
        if l.width() != self.dim {
            return Err(Error::shape(format!(
                "attention expects width {}, got {}",
                self.dim,
                l.width()
            )));
        }
        if l.steps() == 0 {
            return Err(Error::shape("attention over an empty sequence"));
        }
        Ok(())
    }

    fn softmax_matrix<C: MacCounter>(&self, q: &TimestepSequence, k: &TimestepSequence, counter: &mut C) -> Vec<f32> {
        let t = q.steps();
        let divisor = self.scale.divisor(self.dim);
        let mut probs = vec![0.0f32; t * t];
        for (a, row) in probs.chunks_exact_mut(t).enumerate() {
            for (b, s) in row.iter_mut().enumerate() {
                let mut acc = 0.0f32;
                for (x, y) in q.row(a).iter().zip(k.row(b)) {
                    acc += x * y;
                    counter.tick();
                }
                *s = acc / divisor;
            }
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let mut total = 0.0f32;
            for s in row.iter_mut() {
                *s = (*s - max).exp();
                total += *s;
            }
            row.iter_mut().for_each(|s| *s /= total);
        }
        probs
    }

    /// Row-stochastic attention matrix `softmax(QKᵀ / divisor)`, `t×t`.
    pub fn attention_weights(&self, l: &TimestepSequence) -> Result<Vec<f32>> {
        self.check(l)?;
        let q = self.project(Projection::Query, l, &mut NoCount);
        let k = self.project(Projection::Key, l, &mut NoCount);
        Ok(self.softmax_matrix(&q, &k, &mut NoCount))
    }

    pub fn forward(&self, l: &TimestepSequence) -> Result<TimestepSequence> {
        self.forward_counted(l, &mut NoCount)
    }

    /// `U = softmax(QKᵀ / divisor) V`.
    pub fn forward_counted<C: MacCounter>(&self, l: &TimestepSequence, counter: &mut C) -> Result<TimestepSequence> {
        self.check(l)?;
        let q = self.project(Projection::Query, l, counter);
        let k = self.project(Projection::Key, l, counter);
        let v = self.project(Projection::Value, l, counter);
        let probs = self.softmax_matrix(&q, &k, counter);
        let t = l.steps();
        let mut out = TimestepSequence::zeros(t, self.dim);
        for (a, p_row) in probs.chunks_exact(t).enumerate() {
            let dst = out.row_mut(a);
            for (b, &p) in p_row.iter().enumerate() {
                for (o, &vv) in dst.iter_mut().zip(v.row(b)) {
                    *o += p * vv;
                    counter.tick();
                }
            }
        }
        Ok(out)
    }
}

/// Sums `u` over time and feeds the result through a dense stack, returning
/// the single output of the last layer.
pub fn attention_pool_and_classify(u: &TimestepSequence, head: &[Dense]) -> Result<f32> {
    if u.steps() == 0 {
        return Err(Error::shape("cannot pool an empty sequence"));
    }
    let mut x = u.sum_over_time();
    for layer in head {
        x = layer.forward(&x)?;
    }
    match x.as_slice() {
        [p] => Ok(*p),
        other => Err(Error::shape(format!("head produced {} outputs, expected 1", other.len()))),
    }
}
