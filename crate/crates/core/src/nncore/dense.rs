use super::activation::Activation;
use super::counter::{MacCounter, NoCount};
use crate::error::{Error, Result};

/// Fully connected layer, `y = act(W x + b)` with `W` stored out×in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    input: usize,
    output: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    activation: Activation,
}

impl Dense {
    pub fn new(input: usize, output: usize, weights: Vec<f32>, bias: Vec<f32>, activation: Activation) -> Result<Self> {
        if input == 0 || output == 0 {
            return Err(Error::shape("dense dims must be positive"));
        }
        if weights.len() != input * output || bias.len() != output {
            return Err(Error::shape(format!(
                "dense {input}->{output}: got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self { input, output, weights, bias, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn output_dim(&self) -> usize {
        self.output
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

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        self.forward_counted(x, &mut NoCount)
    }

    pub fn forward_counted<C: MacCounter>(&self, x: &[f32], counter: &mut C) -> Result<Vec<f32>> {
        if x.len() != self.input {
            return Err(Error::shape(format!("dense expects width {}, got {}", self.input, x.len())));
        }
        Ok(self
            .weights
            .chunks_exact(self.input)
            .zip(&self.bias)
            .map(|(row, &b)| {
                let mut acc = b;
                for (w, v) in row.iter().zip(x) {
                    acc += w * v;
                    counter.tick();
                }
                self.activation.apply(acc)
            })
            .collect())
    }
}
