//! Flat `key = value` configuration mirroring [`MlpConfig`] and
//! [`TrainingConfig`] field names.
//!
//! ```text
//! # network
//! hidden_layers = 4
//! width = 64
//! lambda2 = 1.0
//! on_surface_batch = 256
//! ```
//!
//! Unset keys keep their defaults. Blank lines and `#` comments are ignored.

use crate::nn::{Activation, MlpConfig};
use crate::training::{Initialization, OnSurfaceBatch, TrainingConfig};
use crate::{Error, Result};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitConfig {
    pub mlp: MlpConfig,
    pub training: TrainingConfig,
}

/// Every recognised key, in the order [`format_config`] writes them.
pub const CONFIG_KEYS: [&str; 20] = [
    "hidden_layers",
    "width",
    "skip_layer_index",
    "activation",
    "epochs",
    "learning_rate",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda4",
    "on_surface_batch",
    "off_surface_per_on_surface",
    "n_reg_times_per_step",
    "adam_beta1",
    "adam_beta2",
    "adam_epsilon",
    "rng_seed",
    "padding",
    "initialization",
    "input_dim",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

impl FitConfig {
    /// Sets one field from its textual value. Returns `Ok(false)` for an
    /// unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<bool, String> {
        let t = &mut self.training;
        let m = &mut self.mlp;
        match key {
            "hidden_layers" => m.hidden_layers = num(key, value)?,
            "width" => m.width = num(key, value)?,
            "skip_layer_index" => m.skip_layer_index = num(key, value)?,
            "activation" => m.activation = value.parse::<Activation>().map_err(|e| e.to_string())?,
            "input_dim" => m.input_dim = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "learning_rate" => t.learning_rate = num(key, value)?,
            "lambda1" => t.weights.lambda1 = num(key, value)?,
            "lambda2" => t.weights.lambda2 = num(key, value)?,
            "lambda3" => t.weights.lambda3 = num(key, value)?,
            "lambda4" => t.weights.lambda4 = num(key, value)?,
            "on_surface_batch" => t.on_surface_batch = value.parse::<OnSurfaceBatch>().map_err(|e| e.to_string())?,
            "off_surface_per_on_surface" => t.off_surface_per_on_surface = num(key, value)?,
            "n_reg_times_per_step" => t.n_reg_times_per_step = num(key, value)?,
            "adam_beta1" => t.adam_beta1 = num(key, value)?,
            "adam_beta2" => t.adam_beta2 = num(key, value)?,
            "adam_epsilon" => t.adam_epsilon = num(key, value)?,
            "rng_seed" => t.rng_seed = num(key, value)?,
            "padding" => t.padding = num(key, value)?,
            "initialization" => t.initialization = value.parse::<Initialization>().map_err(|e| e.to_string())?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Textual value of a key, formatted so that [`FitConfig::set`] restores
    /// it exactly.
    pub fn get(&self, key: &str) -> Option<String> {
        let t = &self.training;
        let m = &self.mlp;
        Some(match key {
            "hidden_layers" => m.hidden_layers.to_string(),
            "width" => m.width.to_string(),
            "skip_layer_index" => m.skip_layer_index.to_string(),
            "activation" => m.activation.to_string(),
            "input_dim" => m.input_dim.to_string(),
            "epochs" => t.epochs.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "lambda1" => t.weights.lambda1.to_string(),
            "lambda2" => t.weights.lambda2.to_string(),
            "lambda3" => t.weights.lambda3.to_string(),
            "lambda4" => t.weights.lambda4.to_string(),
            "on_surface_batch" => t.on_surface_batch.to_string(),
            "off_surface_per_on_surface" => t.off_surface_per_on_surface.to_string(),
            "n_reg_times_per_step" => t.n_reg_times_per_step.to_string(),
            "adam_beta1" => t.adam_beta1.to_string(),
            "adam_beta2" => t.adam_beta2.to_string(),
            "adam_epsilon" => t.adam_epsilon.to_string(),
            "rng_seed" => t.rng_seed.to_string(),
            "padding" => t.padding.to_string(),
            "initialization" => t.initialization.to_string(),
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.mlp.validate()?;
        self.training.validate()
    }
}

/// Splits a `key = value` line, dropping `#` comments. `None` for blank lines.
pub(crate) fn split_pair(line: &str) -> Option<std::result::Result<(&str, &str), String>> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return None;
    }
    Some(match content.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim(), v.trim())),
        _ => Err(format!("expected `key = value`, got {content:?}")),
    })
}

/// Parses configuration text; `path` only labels errors.
pub fn parse_config(text: &str, path: &Path) -> Result<FitConfig> {
    let mut config = FitConfig::default();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let Some(pair) = split_pair(line) else { continue };
        let (key, value) = pair.map_err(|m| Error::parse(path, line_no, m))?;
        if !seen.insert(key.to_string()) {
            return Err(Error::parse(path, line_no, format!("duplicate key {key:?}")));
        }
        match config.set(key, value) {
            Ok(true) => {}
            Ok(false) => return Err(Error::parse(path, line_no, format!("unknown key {key:?}"))),
            Err(m) => return Err(Error::parse(path, line_no, m)),
        }
    }
    config
        .validate()
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(config)
}

pub fn read_config(path: &Path) -> Result<FitConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// All keys with their current values, one per line.
pub fn format_config(config: &FitConfig) -> String {
    let mut out = String::new();
    for key in CONFIG_KEYS {
        let _ = writeln!(out, "{key} = {}", config.get(key).expect("known key"));
    }
    out
}
