use super::MlpConfig;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

/// One affine layer; `weight` is `fan_out x fan_in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// All network parameters, hidden layers first and the output layer last.
///
/// The flat view concatenates layers in order, each as its row-major weight
/// matrix followed by its bias. Optimizer state and model files use it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    layers: Vec<Layer>,
}

impl ParameterSet {
    pub fn zeros(config: &MlpConfig) -> Self {
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(out, inp)| Layer {
                weight: Array2::zeros((out, inp)),
                bias: Array1::zeros(out),
            })
            .collect();
        Self { layers }
    }

    pub fn from_flat(config: &MlpConfig, flat: &[f64]) -> Result<Self> {
        let expected = config.parameter_count();
        if flat.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: flat.len(),
            });
        }
        let mut params = Self::zeros(config);
        params.assign_flat(flat)?;
        Ok(params)
    }

    /// Overwrites every parameter from a flat vector in canonical order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: flat.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for dst in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *dst = flat[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.len());
        for layer in &self.layers {
            flat.extend(layer.weight.iter());
            flat.extend(layer.bias.iter());
        }
        flat
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Verifies that every layer has the shape `config` prescribes.
    pub fn check(&self, config: &MlpConfig) -> Result<()> {
        config.validate()?;
        let shapes = config.layer_shapes();
        let matches = shapes.len() == self.layers.len()
            && shapes.iter().zip(&self.layers).all(|(&(out, inp), l)| {
                l.weight.dim() == (out, inp) && l.bias.len() == out
            });
        if matches {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: config.parameter_count(),
                actual: self.len(),
            })
        }
    }

    /// Offset of each layer's weight block inside the flat view.
    pub(crate) fn flat_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for layer in &self.layers {
            offsets.push(offset);
            offset += layer.weight.len() + layer.bias.len();
        }
        offsets
    }
}

/// Fan-in uniform initialization: weights in `[-s, s]` with
/// `s = sqrt(6 / fan_in)`, biases zero. Deterministic per seed.
pub fn init_params(config: &MlpConfig, seed: u64) -> Result<ParameterSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::zeros(config);
    for layer in params.layers_mut() {
        let fan_in = layer.weight.ncols() as f64;
        let bound = (6.0 / fan_in).sqrt();
        for w in layer.weight.iter_mut() {
            *w = rng.random_range(-bound..=bound);
        }
    }
    Ok(params)
}

/// Initialization that starts the network close to `|x| - radius` for every
/// time: hidden weights Gaussian with variance `2 / fan_out`, output weights
/// near `sqrt(pi / width)`, output bias `-radius`. The time input and the
/// skip connection start disconnected so the initial field is static and a
/// plain ReLU cone. Inputs are ordered `(x, y, z, t)`.
pub fn init_sphere_params(config: &MlpConfig, seed: u64, radius: f64) -> Result<ParameterSet> {
    config.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidConfig(format!("sphere initialization radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::zeros(config);
    let n = params.layers().len();
    let input_dim = config.input_dim;
    for (i, layer) in params.layers_mut().iter_mut().enumerate() {
        let (fan_out, fan_in) = layer.weight.dim();
        if i + 1 == n {
            let mean = (std::f64::consts::PI / fan_in as f64).sqrt();
            for w in layer.weight.iter_mut() {
                *w = mean + 1e-4 * rng.sample::<f64, _>(StandardNormal);
            }
            layer.bias.fill(-radius);
            continue;
        }
        let std = (2.0 / fan_out as f64).sqrt();
        for w in layer.weight.iter_mut() {
            *w = std * rng.sample::<f64, _>(StandardNormal);
        }
        if i == 0 && input_dim > 3 {
            layer.weight.columns_mut().into_iter().skip(3).for_each(|mut c| c.fill(0.0));
        }
        if i > 0 && i + 1 == config.skip_layer_index {
            layer.weight.columns_mut().into_iter().skip(fan_in - input_dim).for_each(|mut c| c.fill(0.0));
        }
    }
    Ok(params)
}
