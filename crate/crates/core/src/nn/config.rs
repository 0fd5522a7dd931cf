use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Number of network inputs: three spatial coordinates and time.
pub const INPUT_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Activation::Relu => f.write_str("relu"),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            other => Err(Error::InvalidConfig(format!("unsupported activation {other:?}"))),
        }
    }
}

/// Upper bounds accepted by [`MlpConfig::validate`]; they keep parameter
/// counts far from overflow when configurations come from files.
pub const MAX_WIDTH: usize = 4096;
pub const MAX_HIDDEN_LAYERS: usize = 64;

/// Architecture of the space-time MLP.
///
/// Hidden layer `skip_layer_index` (1-based) receives the raw inputs
/// concatenated after the previous layer's activations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub width: usize,
    pub skip_layer_index: usize,
    pub activation: Activation,
    pub output_dim: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            input_dim: INPUT_DIM,
            hidden_layers: 6,
            width: 256,
            skip_layer_index: 3,
            activation: Activation::Relu,
            output_dim: 1,
        }
    }
}

impl MlpConfig {
    pub fn new(hidden_layers: usize, width: usize, skip_layer_index: usize) -> Result<Self> {
        let config = Self {
            hidden_layers,
            width,
            skip_layer_index,
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim != INPUT_DIM {
            return Err(Error::InvalidConfig(format!(
                "input_dim must be {INPUT_DIM}, got {}",
                self.input_dim
            )));
        }
        if self.output_dim != 1 {
            return Err(Error::InvalidConfig(format!(
                "output_dim must be 1, got {}",
                self.output_dim
            )));
        }
        if self.hidden_layers == 0 || self.width == 0 {
            return Err(Error::InvalidConfig(
                "hidden_layers and width must be positive".into(),
            ));
        }
        if self.width > MAX_WIDTH || self.hidden_layers > MAX_HIDDEN_LAYERS {
            return Err(Error::InvalidConfig(format!(
                "network too large: at most {MAX_HIDDEN_LAYERS} hidden layers of width {MAX_WIDTH}"
            )));
        }
        if self.skip_layer_index == 0 || self.skip_layer_index > self.hidden_layers {
            return Err(Error::InvalidConfig(format!(
                "skip_layer_index must lie in 1..={}, got {}",
                self.hidden_layers, self.skip_layer_index
            )));
        }
        Ok(())
    }

    /// Number of features entering hidden layer `index` (0-based).
    pub fn fan_in(&self, index: usize) -> usize {
        let base = if index == 0 { self.input_dim } else { self.width };
        if index + 1 == self.skip_layer_index {
            base + self.input_dim
        } else {
            base
        }
    }

    /// `(fan_out, fan_in)` of every affine layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.hidden_layers)
            .map(|i| (self.width, self.fan_in(i)))
            .chain(std::iter::once((self.output_dim, self.width)))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|&(out, inp)| out * inp + out)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_published_architecture() {
        let c = MlpConfig::default();
        assert_eq!((c.hidden_layers, c.width, c.skip_layer_index), (6, 256, 3));
        assert_eq!(c.activation, Activation::Relu);
    }

    #[test]
    fn default_parameter_count_closed_form() {
        // first layer, four plain 256-wide layers, the skip layer and the output node
        let first = 4 * 256 + 256;
        let plain = 256 * 256 + 256;
        let skip = (256 + 4) * 256 + 256;
        let output = 256 + 1;
        assert_eq!(MlpConfig::default().parameter_count(), first + 4 * plain + skip + output);
        assert_eq!(MlpConfig::default().parameter_count(), 331_521);
    }

    #[test]
    fn skip_on_first_layer_doubles_raw_inputs() {
        let c = MlpConfig::new(2, 8, 1).unwrap();
        assert_eq!(c.fan_in(0), 8);
        assert_eq!(c.fan_in(1), 8);
    }

    #[test]
    fn rejects_out_of_range_skip() {
        assert!(MlpConfig::new(3, 8, 0).is_err());
        assert!(MlpConfig::new(3, 8, 4).is_err());
    }
}
