use super::activation::Activation;
use super::counter::{MacCounter, NoCount};
use super::tensor::Tensor3;
use crate::error::{Error, Result};

/// Valid-padding 2-D convolution over (time, freq) with channels last.
///
/// Weights are laid out `[kt][kf][cin][cout]`. The activation is applied
/// after the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    kernel: (usize, usize),
    stride: (usize, usize),
    in_channels: usize,
    out_channels: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    activation: Activation,
}

impl Conv2d {
    pub fn new(
        kernel: (usize, usize),
        stride: (usize, usize),
        in_channels: usize,
        out_channels: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
        activation: Activation,
    ) -> Result<Self> {
        if kernel.0 == 0 || kernel.1 == 0 || stride.0 == 0 || stride.1 == 0 {
            return Err(Error::shape("conv kernel and stride must be positive"));
        }
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::shape("conv channels must be positive"));
        }
        let expected = kernel.0 * kernel.1 * in_channels * out_channels;
        if weights.len() != expected {
            return Err(Error::shape(format!(
                "conv weights hold {} values, expected {expected}",
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::shape(format!(
                "conv bias holds {} values, expected {out_channels}",
                bias.len()
            )));
        }
        Ok(Self {
            kernel,
            stride,
            in_channels,
            out_channels,
            weights,
            bias,
            activation,
        })
    }

    pub fn kernel(&self) -> (usize, usize) {
        self.kernel
    }

    pub fn stride(&self) -> (usize, usize) {
        self.stride
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Output (time, freq) extent for a `t`×`f` input.
    pub fn output_dims(&self, t: usize, f: usize) -> Result<(usize, usize)> {
        let (kt, kf) = self.kernel;
        if t < kt || f < kf {
            return Err(Error::shape(format!(
                "conv kernel {kt}x{kf} larger than {t}x{f} input"
            )));
        }
        Ok(((t - kt) / self.stride.0 + 1, (f - kf) / self.stride.1 + 1))
    }

    pub fn forward(&self, input: &Tensor3) -> Result<Tensor3> {
        self.forward_counted(input, &mut NoCount)
    }

    pub fn forward_counted<C: MacCounter>(
        &self,
        input: &Tensor3,
        counter: &mut C,
    ) -> Result<Tensor3> {
        let (t, f, c) = input.dims();
        if c != self.in_channels {
            return Err(Error::shape(format!(
                "conv expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        let (ot, of) = self.output_dims(t, f)?;
        let mut out = Tensor3::zeros((ot, of, self.out_channels));
        let row_len = of * self.out_channels;
        let mut rows: Vec<&[f32]> = Vec::with_capacity(self.kernel.0);
        for (o, dst) in out.as_mut_slice().chunks_exact_mut(row_len).enumerate() {
            rows.clear();
            rows.extend((0..self.kernel.0).map(|i| input.time_row(o * self.stride.0 + i)));
            self.row(&rows, f, dst, counter);
        }
        Ok(out)
    }

    /// Computes one output time row from the `kt` input rows it covers.
    ///
    /// Both the offline and the streaming paths go through this function,
    /// so their outputs agree bitwise.
    pub(crate) fn row<C: MacCounter>(
        &self,
        rows: &[&[f32]],
        in_freq: usize,
        out: &mut [f32],
        counter: &mut C,
    ) {
        let (kt, kf) = self.kernel;
        let (cin, cout) = (self.in_channels, self.out_channels);
        debug_assert_eq!(rows.len(), kt);
        let out_freq = (in_freq - kf) / self.stride.1 + 1;
        debug_assert_eq!(out.len(), out_freq * cout);
        for (of, acc) in out.chunks_exact_mut(cout).enumerate() {
            acc.copy_from_slice(&self.bias);
            for (i, row) in rows.iter().enumerate() {
                for j in 0..kf {
                    let fin = of * self.stride.1 + j;
                    let xs = &row[fin * cin..(fin + 1) * cin];
                    for (ci, &x) in xs.iter().enumerate() {
                        let base = ((i * kf + j) * cin + ci) * cout;
                        for (a, &w) in acc.iter_mut().zip(&self.weights[base..base + cout]) {
                            *a += x * w;
                            counter.tick();
                        }
                    }
                }
            }
            self.activation.apply_slice(acc);
        }
    }
}

/// Plain cross-correlation plus bias, no activation.
///
/// `kernel` is `[kt][kf][cin][cout]` with dims given by `kdims`.
pub fn conv2d(
    input: &Tensor3,
    kernel: &[f32],
    kdims: (usize, usize, usize, usize),
    stride: (usize, usize),
    bias: &[f32],
) -> Result<Tensor3> {
    let (kt, kf, cin, cout) = kdims;
    Conv2d::new(
        (kt, kf),
        stride,
        cin,
        cout,
        kernel.to_vec(),
        bias.to_vec(),
        Activation::Linear,
    )?
    .forward(input)
}
