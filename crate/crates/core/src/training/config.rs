use crate::nn::LossWeights;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// How many surface points of each scan enter one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnSurfaceBatch {
    /// Every point of every scan, every epoch.
    FullCloud,
    /// A uniform random subset of this size per scan (all points when the
    /// cloud is smaller).
    PerScan(usize),
}

impl std::fmt::Display for OnSurfaceBatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OnSurfaceBatch::FullCloud => f.write_str("full-cloud"),
            OnSurfaceBatch::PerScan(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for OnSurfaceBatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "full-cloud" {
            return Ok(OnSurfaceBatch::FullCloud);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(OnSurfaceBatch::PerScan(n)),
            _ => Err(Error::InvalidTraining(format!(
                "on_surface_batch must be \"full-cloud\" or a positive count, got {s:?}"
            ))),
        }
    }
}

/// Starting point of the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// Uniform weights scaled by fan-in, zero biases.
    FanIn,
    /// Network starts near the signed distance of a static sphere of this
    /// normalized radius, which fixes inside as negative from the outset.
    Sphere(f64),
}

impl std::fmt::Display for Initialization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Initialization::FanIn => f.write_str("fan-in"),
            Initialization::Sphere(r) => write!(f, "sphere:{r}"),
        }
    }
}

impl std::str::FromStr for Initialization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "fan-in" {
            return Ok(Initialization::FanIn);
        }
        match s.strip_prefix("sphere:").map(|r| r.trim().parse::<f64>()) {
            Some(Ok(r)) if r > 0.0 && r.is_finite() => Ok(Initialization::Sphere(r)),
            _ => Err(Error::InvalidTraining(format!(
                "initialization must be \"fan-in\" or \"sphere:<radius>\" with a positive radius, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weights: LossWeights,
    pub on_surface_batch: OnSurfaceBatch,
    /// Off-surface samples drawn per on-surface point, for both the scan-time
    /// and the regularization-time sets.
    pub off_surface_per_on_surface: f64,
    /// Distinct regularization times drawn per step.
    pub n_reg_times_per_step: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub rng_seed: u64,
    /// Largest normalized half-extent of the joint bounding box.
    pub padding: f64,
    pub initialization: Initialization,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 25_000,
            learning_rate: 1e-4,
            weights: LossWeights::default(),
            on_surface_batch: OnSurfaceBatch::FullCloud,
            off_surface_per_on_surface: 1.0,
            n_reg_times_per_step: 4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            rng_seed: 0,
            padding: 0.9,
            initialization: Initialization::FanIn,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidTraining(msg));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.off_surface_per_on_surface > 0.0 && self.off_surface_per_on_surface.is_finite()) {
            return fail(format!(
                "off_surface_per_on_surface must be positive, got {}",
                self.off_surface_per_on_surface
            ));
        }
        if self.n_reg_times_per_step == 0 {
            return fail("n_reg_times_per_step must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return fail("Adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_epsilon > 0.0) {
            return fail("adam_epsilon must be positive".into());
        }
        if !(self.padding > 0.0 && self.padding <= 1.0) {
            return fail(format!("padding must lie in (0, 1], got {}", self.padding));
        }
        if let Initialization::Sphere(r) = self.initialization {
            if !(r > 0.0 && r.is_finite()) {
                return fail(format!("sphere initialization radius must be positive, got {r}"));
            }
        }
        if let OnSurfaceBatch::PerScan(0) = self.on_surface_batch {
            return fail("on_surface_batch must be positive".into());
        }
        self.weights.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_protocol() {
        let c = TrainingConfig::default();
        assert_eq!(c.epochs, 25_000);
        assert_eq!(c.learning_rate, 1e-4);
        assert_eq!(c.weights, LossWeights { lambda1: 0.1, lambda2: 0.1, lambda3: 0.1, lambda4: 0.1 });
        assert_eq!(c.on_surface_batch, OnSurfaceBatch::FullCloud);
        assert_eq!((c.adam_beta1, c.adam_beta2, c.adam_epsilon), (0.9, 0.999, 1e-8));
        c.validate().unwrap();
    }

    #[test]
    fn batch_spec_parses() {
        assert_eq!("full-cloud".parse::<OnSurfaceBatch>().unwrap(), OnSurfaceBatch::FullCloud);
        assert_eq!("512".parse::<OnSurfaceBatch>().unwrap(), OnSurfaceBatch::PerScan(512));
        assert!("0".parse::<OnSurfaceBatch>().is_err());
        assert!("lots".parse::<OnSurfaceBatch>().is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = [
            TrainingConfig { epochs: 0, ..Default::default() },
            TrainingConfig { learning_rate: 0.0, ..Default::default() },
            TrainingConfig { off_surface_per_on_surface: -1.0, ..Default::default() },
            TrainingConfig { n_reg_times_per_step: 0, ..Default::default() },
        ];
        assert!(bad.iter().all(|c| c.validate().is_err()));
    }
}
