use super::config::{LayerSpec, ModelConfig};
use crate::error::{Error, Result};

/// Time-axis geometry of a model's row-local front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceptiveField {
    /// Input frames seen by one front-end output timestep.
    pub rf: usize,
    /// Input frames between consecutive output timesteps.
    pub stride: usize,
    /// Output timesteps produced from the configured input window.
    pub steps: usize,
}

impl std::fmt::Display for ReceptiveField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rf={} stride={} steps={}", self.rf, self.stride, self.steps)
    }
}

/// (kernel, stride) along time for each front-end stage. Delta counts as a
/// 2-tap, stride-1 stage.
pub(crate) fn time_stages(config: &ModelConfig) -> Vec<(usize, usize)> {
    config.layers[..config.front_len()]
        .iter()
        .filter_map(|l| match l {
            LayerSpec::Delta => Some((2, 1)),
            LayerSpec::Conv { kernel, stride, .. } => Some((kernel[0], stride[0])),
            _ => None,
        })
        .collect()
}

fn geometry(stages: &[(usize, usize)], frames: usize) -> Result<ReceptiveField> {
    let mut rf = 1;
    let mut stride = 1;
    for &(kt, st) in stages {
        rf += (kt - 1) * stride;
        stride *= st;
    }
    if rf > frames {
        return Err(Error::FrontEndTooDeep { rf, frames });
    }
    Ok(ReceptiveField { rf, stride, steps: (frames - rf) / stride + 1 })
}

/// Receptive field, stride and output length of the conv front end over
/// the configured input window.
pub fn receptive_field(config: &ModelConfig) -> Result<ReceptiveField> {
    if !config.has_conv() {
        return Err(Error::NoConvFrontEnd);
    }
    geometry(&time_stages(config), config.input.frames)
}

/// Like [`receptive_field`], but models without a conv front end map one
/// input frame to one step.
pub(crate) fn front_geometry(config: &ModelConfig) -> Result<ReceptiveField> {
    geometry(&time_stages(config), config.input.frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::Activation;

    fn conv(kt: usize, st: usize) -> LayerSpec {
        LayerSpec::Conv { kernel: [kt, 1], stride: [st, 1], channels: 1, activation: Activation::Linear }
    }

    fn with_front(frames: usize, front: Vec<LayerSpec>) -> ModelConfig {
        let mut layers = front;
        layers.extend([
            LayerSpec::FlattenAll,
            LayerSpec::Dense { units: 1, activation: Activation::Sigmoid },
        ]);
        ModelConfig::new("t", frames, 4, layers)
    }

    #[test]
    fn three_stage_example() {
        let cfg = with_front(100, vec![conv(8, 2), conv(5, 2), conv(4, 2)]);
        assert_eq!(
            receptive_field(&cfg).unwrap(),
            ReceptiveField { rf: 1 + 7 + 8 + 12, stride: 8, steps: 10 }
        );
    }

    #[test]
    fn unit_kernel_keeps_every_frame() {
        let cfg = with_front(37, vec![conv(1, 1)]);
        assert_eq!(receptive_field(&cfg).unwrap(), ReceptiveField { rf: 1, stride: 1, steps: 37 });
    }

    #[test]
    fn delta_widens_by_one_frame() {
        let cfg = with_front(101, vec![LayerSpec::Delta, conv(8, 2), conv(5, 2), conv(4, 2)]);
        assert_eq!(receptive_field(&cfg).unwrap(), ReceptiveField { rf: 29, stride: 8, steps: 10 });
    }

    #[test]
    fn too_deep_and_no_conv() {
        let cfg = with_front(20, vec![conv(8, 2), conv(5, 2), conv(4, 2)]);
        assert!(matches!(receptive_field(&cfg), Err(Error::FrontEndTooDeep { rf: 28, frames: 20 })));
        assert!(matches!(receptive_field(&with_front(10, vec![])), Err(Error::NoConvFrontEnd)));
        assert_eq!(front_geometry(&with_front(10, vec![])).unwrap().steps, 10);
    }
}
