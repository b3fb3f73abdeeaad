use super::activation::sigmoid;
use super::counter::{MacCounter, NoCount};
use super::tensor::TimestepSequence;
use crate::error::{Error, Result};

/// Gate slots in the packed parameter tensors.
pub const UPDATE: usize = 0;
pub const RESET: usize = 1;
pub const CANDIDATE: usize = 2;

/// GRU weights with one bias per gate.
///
/// ```text
/// z  = σ(W_z x + U_z h + b_z)
/// r  = σ(W_r x + U_r h + b_r)
/// h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
/// h' = (1 - z) ⊙ h + z ⊙ h~
/// ```
///
/// `w` is `[3][d][n]`, `u` is `[3][d][d]`, `b` is `[3][d]`, gates ordered
/// update, reset, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    input_dim: usize,
    hidden_dim: usize,
    w: Vec<f32>,
    u: Vec<f32>,
    b: Vec<f32>,
}

impl GruParams {
    pub fn new(input_dim: usize, hidden_dim: usize, w: Vec<f32>, u: Vec<f32>, b: Vec<f32>) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::shape("GRU dims must be positive"));
        }
        let (n, d) = (input_dim, hidden_dim);
        if w.len() != 3 * d * n || u.len() != 3 * d * d || b.len() != 3 * d {
            return Err(Error::shape(format!(
                "GRU n={n} d={d}: got |W|={}, |U|={}, |b|={}",
                w.len(),
                u.len(),
                b.len()
            )));
        }
        Ok(Self { input_dim, hidden_dim, w, u, b })
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let (n, d) = (input_dim, hidden_dim);
        Self {
            input_dim,
            hidden_dim,
            w: vec![0.0; 3 * d * n],
            u: vec![0.0; 3 * d * d],
            b: vec![0.0; 3 * d],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn w(&self) -> &[f32] {
        &self.w
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn b(&self) -> &[f32] {
        &self.b
    }

    pub fn w_mut(&mut self) -> &mut [f32] {
        &mut self.w
    }

    pub fn u_mut(&mut self) -> &mut [f32] {
        &mut self.u
    }

    pub fn b_mut(&mut self) -> &mut [f32] {
        &mut self.b
    }

    fn w_row(&self, gate: usize, i: usize) -> &[f32] {
        let n = self.input_dim;
        let start = (gate * self.hidden_dim + i) * n;
        &self.w[start..start + n]
    }

    fn u_row(&self, gate: usize, i: usize) -> &[f32] {
        let d = self.hidden_dim;
        let start = (gate * d + i) * d;
        &self.u[start..start + d]
    }

    /// `b + W_row · x + U_row · h`, accumulated left to right.
    #[inline]
    fn preact<C: MacCounter>(&self, gate: usize, i: usize, x: &[f32], h: &[f32], counter: &mut C) -> f32 {
        let mut acc = self.b[gate * self.hidden_dim + i];
        for (w, v) in self.w_row(gate, i).iter().zip(x) {
            acc += w * v;
            counter.tick();
        }
        for (u, v) in self.u_row(gate, i).iter().zip(h) {
            acc += u * v;
            counter.tick();
        }
        acc
    }

    /// One recurrence step: writes the new state for input `x` and state `h`.
    pub fn step<C: MacCounter>(&self, x: &[f32], h: &[f32], out: &mut [f32], counter: &mut C) {
        let d = self.hidden_dim;
        debug_assert_eq!(x.len(), self.input_dim);
        debug_assert_eq!(h.len(), d);
        let z: Vec<f32> = (0..d).map(|i| sigmoid(self.preact(UPDATE, i, x, h, counter))).collect();
        let rh: Vec<f32> = (0..d)
            .map(|i| sigmoid(self.preact(RESET, i, x, h, counter)) * h[i])
            .collect();
        for i in 0..d {
            let cand = self.preact(CANDIDATE, i, x, &rh, counter).tanh();
            out[i] = (1.0 - z[i]) * h[i] + z[i] * cand;
        }
    }

    /// Advances `batch` independent states at once, sharing one set of
    /// weights. Row `k` of `states` consumes `inputs[k]`.
    ///
    /// The weights are walked once per step and reused across the batch; per
    /// element the arithmetic matches [`GruParams::step`] bitwise.
    pub fn step_batch<C: MacCounter>(&self, inputs: &[&[f32]], states: &mut [f32], counter: &mut C) {
        let d = self.hidden_dim;
        let batch = inputs.len();
        debug_assert_eq!(states.len(), batch * d);
        let mut z = vec![0.0f32; batch * d];
        let mut rh = vec![0.0f32; batch * d];
        for i in 0..d {
            for (k, x) in inputs.iter().enumerate() {
                let h = &states[k * d..(k + 1) * d];
                z[k * d + i] = sigmoid(self.preact(UPDATE, i, x, h, counter));
                rh[k * d + i] = sigmoid(self.preact(RESET, i, x, h, counter)) * h[i];
            }
        }
        let mut cand = vec![0.0f32; batch * d];
        for i in 0..d {
            for (k, x) in inputs.iter().enumerate() {
                cand[k * d + i] = self.preact(CANDIDATE, i, x, &rh[k * d..(k + 1) * d], counter).tanh();
            }
        }
        for ((h, z), c) in states.iter_mut().zip(&z).zip(&cand) {
            *h = (1.0 - z) * *h + z * c;
        }
    }

    pub fn forward(&self, inputs: &TimestepSequence, h0: &[f32]) -> Result<TimestepSequence> {
        self.forward_counted(inputs, h0, &mut NoCount)
    }

    /// Runs the recurrence over every step, returning all hidden states.
    pub fn forward_counted<C: MacCounter>(
        &self,
        inputs: &TimestepSequence,
        h0: &[f32],
        counter: &mut C,
    ) -> Result<TimestepSequence> {
        if inputs.width() != self.input_dim {
            return Err(Error::shape(format!(
                "GRU expects width {}, got {}",
                self.input_dim,
                inputs.width()
            )));
        }
        if h0.len() != self.hidden_dim {
            return Err(Error::shape(format!(
                "GRU initial state has {} values, expected {}",
                h0.len(),
                self.hidden_dim
            )));
        }
        let d = self.hidden_dim;
        let mut out = TimestepSequence::zeros(inputs.steps(), d);
        let mut h = h0.to_vec();
        for (t, x) in inputs.rows().enumerate() {
            self.step(x, &h, out.row_mut(t), counter);
            h.copy_from_slice(out.row(t));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_params(n: usize, d: usize, seed: u64) -> GruParams {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut r = |k: usize| (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect::<Vec<f32>>();
        GruParams::new(n, d, r(3 * d * n), r(3 * d * d), r(3 * d)).unwrap()
    }

    fn random_seq(steps: usize, n: usize, seed: u64) -> TimestepSequence {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        TimestepSequence::new(steps, n, (0..steps * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_params_stay_at_zero() {
        let out = GruParams::zeros(4, 3).forward(&random_seq(6, 4, 1), &[0.0; 3]).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_matches_hand_calculation() {
        // n = d = 1; W = [0.5, -0.3, 0.8], U = [0.2, 0.4, -0.6], b = [0.1, -0.2, 0.05]
        let p = GruParams::new(1, 1, vec![0.5, -0.3, 0.8], vec![0.2, 0.4, -0.6], vec![0.1, -0.2, 0.05]).unwrap();
        let (x, h) = (0.7f64, 0.4f64);
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z = sig(0.1 + 0.5 * x + 0.2 * h);
        let r = sig(-0.2 - 0.3 * x + 0.4 * h);
        let c = (0.05 + 0.8 * x - 0.6 * (r * h)).tanh();
        let expect = (1.0 - z) * h + z * c;
        let seq = TimestepSequence::new(1, 1, vec![0.7]).unwrap();
        let out = p.forward(&seq, &[0.4]).unwrap();
        assert!((f64::from(out.row(0)[0]) - expect).abs() < 1e-6, "{} vs {expect}", out.row(0)[0]);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        assert!(matches!(
            GruParams::zeros(4, 2).forward(&random_seq(2, 3, 0), &[0.0; 2]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn batch_step_matches_single_steps() {
        let p = random_params(5, 4, 9);
        let xs = random_seq(3, 5, 10);
        let mut states: Vec<f32> = random_seq(3, 4, 11).into_vec();
        let mut expect = states.clone();
        for k in 0..3 {
            let h = expect[k * 4..(k + 1) * 4].to_vec();
            p.step(xs.row(k), &h, &mut expect[k * 4..(k + 1) * 4], &mut NoCount);
        }
        let inputs: Vec<&[f32]> = xs.rows().collect();
        p.step_batch(&inputs, &mut states, &mut NoCount);
        assert_eq!(states, expect);
    }

    proptest! {
        #[test]
        fn state_threading_is_exact(seed in any::<u64>(), steps in 1usize..12, split in 0usize..12) {
            let split = split.min(steps);
            let p = random_params(6, 5, seed);
            let xs = random_seq(steps, 6, seed ^ 0xabc);
            let full = p.forward(&xs, &[0.0; 5]).unwrap();
            let first = TimestepSequence::new(split, 6, xs.as_slice()[..split * 6].to_vec()).unwrap();
            let rest = TimestepSequence::new(steps - split, 6, xs.as_slice()[split * 6..].to_vec()).unwrap();
            let a = p.forward(&first, &[0.0; 5]).unwrap();
            let h = a.last().map_or(vec![0.0; 5], <[f32]>::to_vec);
            let b = p.forward(&rest, &h).unwrap();
            let mut joined = a.into_vec();
            joined.extend(b.into_vec());
            let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&joined), bits(full.as_slice()));
        }
    }
}
