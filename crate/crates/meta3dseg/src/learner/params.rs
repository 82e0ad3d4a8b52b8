//! Parameter containers and initialization for the encoder and the dense
//! predictor stack.

use rand_chacha::ChaCha8Rng;

use crate::learner::config::{ArchitectureConfig, PredictorLayout, CONV_KERNEL};
use crate::numerics::{Scalar, Tensor};
use crate::rng::uniform;
use crate::{Error, Result};

/// Weights of one 3D conv layer: kernel `[co, ci, k, k, k]` and bias `[co]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// The voxel encoder's weights (g1).
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams<T> {
    pub layers: Vec<ConvLayer<T>>,
}

impl<T: Scalar> EncoderParams<T> {
    /// Kaiming-uniform kernels (bound sqrt(6 / fan_in)), zero biases.
    pub fn init(config: &ArchitectureConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut layers = Vec::with_capacity(config.conv_channels.len());
        let mut c_in = 1;
        for &c_out in &config.conv_channels {
            let fan_in = c_in * CONV_KERNEL.pow(3);
            let bound = (6.0 / fan_in as f64).sqrt();
            let n = c_out * fan_in;
            let data: Vec<T> = (0..n)
                .map(|_| T::from_f64(uniform(rng, -bound, bound)))
                .collect();
            layers.push(ConvLayer {
                weight: Tensor::from_vec(
                    &[c_out, c_in, CONV_KERNEL, CONV_KERNEL, CONV_KERNEL],
                    data,
                )
                .expect("kernel shape"),
                bias: Tensor::zeros(&[c_out]),
            });
            c_in = c_out;
        }
        EncoderParams { layers }
    }

    pub fn zeros(config: &ArchitectureConfig) -> Self {
        let mut layers = Vec::with_capacity(config.conv_channels.len());
        let mut c_in = 1;
        for &c_out in &config.conv_channels {
            layers.push(ConvLayer {
                weight: Tensor::zeros(&[c_out, c_in, CONV_KERNEL, CONV_KERNEL, CONV_KERNEL]),
                bias: Tensor::zeros(&[c_out]),
            });
            c_in = c_out;
        }
        EncoderParams { layers }
    }

    pub fn validate_against(&self, config: &ArchitectureConfig) -> Result<()> {
        if self.layers.len() != config.conv_channels.len() {
            return Err(Error::ShapeMismatch(format!(
                "encoder has {} layers, config wants {}",
                self.layers.len(),
                config.conv_channels.len()
            )));
        }
        let mut c_in = 1;
        for (i, (layer, &c_out)) in self.layers.iter().zip(&config.conv_channels).enumerate() {
            let want = [c_out, c_in, CONV_KERNEL, CONV_KERNEL, CONV_KERNEL];
            if layer.weight.shape() != want {
                return Err(Error::ShapeMismatch(format!(
                    "encoder layer {i} kernel {:?}, config wants {want:?}",
                    layer.weight.shape()
                )));
            }
            if layer.bias.shape() != [c_out] {
                return Err(Error::ShapeMismatch(format!(
                    "encoder layer {i} bias {:?}, config wants [{c_out}]",
                    layer.bias.shape()
                )));
            }
            c_in = c_out;
        }
        Ok(())
    }

    /// Named tensors in a fixed serialization order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            out.push((format!("encoder.{i}.weight"), &layer.weight));
            out.push((format!("encoder.{i}.bias"), &layer.bias));
        }
        out
    }
}

/// The two flat parameter vectors of the dense stack; the effective weights
/// are always their element-wise sum.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerWeights<T> {
    pub theta_m: Vec<T>,
    pub theta_l: Vec<T>,
}

impl<T: Scalar> LearnerWeights<T> {
    pub fn new(theta_m: Vec<T>, theta_l: Vec<T>) -> Result<Self> {
        if theta_m.len() != theta_l.len() {
            return Err(Error::ShapeMismatch(format!(
                "theta_m has {} entries, theta_l {}",
                theta_m.len(),
                theta_l.len()
            )));
        }
        Ok(LearnerWeights { theta_m, theta_l })
    }

    /// theta_m with theta_l all zero.
    pub fn from_meta(theta_m: Vec<T>) -> Self {
        let theta_l = vec![T::zero(); theta_m.len()];
        LearnerWeights { theta_m, theta_l }
    }

    pub fn len(&self) -> usize {
        self.theta_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_m.is_empty()
    }

    pub fn validate_against(&self, layout: &PredictorLayout) -> Result<()> {
        if self.len() != layout.total {
            return Err(Error::ShapeMismatch(format!(
                "weight vectors have {} entries, layout wants {}",
                self.len(),
                layout.total
            )));
        }
        Ok(())
    }

    pub fn effective(&self) -> Vec<T> {
        self.theta_m
            .iter()
            .zip(&self.theta_l)
            .map(|(&m, &l)| m + l)
            .collect()
    }
}

/// Kaiming-uniform weights and zero biases for a flat dense stack, used when
/// the predictor is trained without a meta-learner.
pub fn init_dense_flat<T: Scalar>(layout: &PredictorLayout, rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut flat = vec![T::zero(); layout.total];
    for layer in &layout.layers {
        let bound = (6.0 / layer.in_dim as f64).sqrt();
        for slot in &mut flat[layer.w_start..layer.w_start + layer.w_len()] {
            *slot = T::from_f64(uniform(rng, -bound, bound));
        }
    }
    flat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn encoder_init_matches_config_shapes() {
        let config = ArchitectureConfig::desk();
        let params: EncoderParams<f32> = EncoderParams::init(&config, &mut stream(1, "enc"));
        params.validate_against(&config).unwrap();
        assert_eq!(params.layers.len(), 4);
        assert_eq!(params.layers[0].weight.shape(), &[16, 1, 4, 4, 4]);
        assert_eq!(params.layers[3].weight.shape(), &[128, 64, 4, 4, 4]);
        // Weights stay inside the Kaiming bound for the first layer.
        let bound = (6.0 / 64.0_f64).sqrt() as f32;
        assert!(params.layers[0]
            .weight
            .data()
            .iter()
            .all(|w| w.abs() <= bound));
    }

    #[test]
    fn encoder_init_is_deterministic() {
        let config = ArchitectureConfig::desk();
        let a: EncoderParams<f32> = EncoderParams::init(&config, &mut stream(7, "enc"));
        let b: EncoderParams<f32> = EncoderParams::init(&config, &mut stream(7, "enc"));
        assert_eq!(a, b);
    }

    #[test]
    fn weight_vectors_must_align() {
        assert!(LearnerWeights::new(vec![0.0f32; 4], vec![0.0; 5]).is_err());
        let w = LearnerWeights::new(vec![1.0f32, 2.0], vec![0.5, -2.0]).unwrap();
        assert_eq!(w.effective(), vec![1.5, 0.0]);
    }

    #[test]
    fn dense_init_zeroes_biases() {
        let layout = PredictorLayout::from_config(&ArchitectureConfig::desk());
        let flat: Vec<f32> = init_dense_flat(&layout, &mut stream(2, "dense"));
        for layer in &layout.layers {
            assert!(flat[layer.b_start..layer.b_start + layer.b_len()]
                .iter()
                .all(|&b| b == 0.0));
            assert!(flat[layer.w_start..layer.w_start + layer.w_len()]
                .iter()
                .any(|&w| w != 0.0));
        }
    }
}
