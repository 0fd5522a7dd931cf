use crate::geometry::{NormalizationTransform, ScalarField};
use crate::nn::{
    evaluate_batch, forward, forward_with_input_grad, MlpConfig, ParameterSet, SdfEvaluation,
    SpaceTimePoint,
};
use crate::{Result, Vec3};

/// A fitted space-time SDF: architecture, parameters and the transform
/// between physical and normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSdfModel {
    config: MlpConfig,
    params: ParameterSet,
    transform: NormalizationTransform,
}

impl TemporalSdfModel {
    pub fn new(config: MlpConfig, params: ParameterSet, transform: NormalizationTransform) -> Result<Self> {
        params.check(&config)?;
        transform.validate()?;
        Ok(Self { config, params, transform })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn transform(&self) -> &NormalizationTransform {
        &self.transform
    }

    /// SDF value in normalized units at a normalized space-time point.
    pub fn value(&self, x: &Vec3, t: f64) -> f64 {
        forward(&self.params, &self.config, &SpaceTimePoint::new(*x, t)).expect("shapes checked at construction")
    }

    pub fn evaluate(&self, x: &Vec3, t: f64) -> SdfEvaluation {
        forward_with_input_grad(&self.params, &self.config, &SpaceTimePoint::new(*x, t))
            .expect("shapes checked at construction")
    }

    pub fn values(&self, points: &[[f64; 4]]) -> Vec<f64> {
        evaluate_batch(&self.params, &self.config, points).expect("shapes checked at construction")
    }

    /// The spatial field at normalized time `t`.
    pub fn at_time(&self, t: f64) -> ModelSlice<'_> {
        ModelSlice { model: self, t }
    }
}

/// A model frozen at one normalized time.
pub struct ModelSlice<'a> {
    model: &'a TemporalSdfModel,
    t: f64,
}

impl ScalarField for ModelSlice<'_> {
    fn value(&self, p: &Vec3) -> f64 {
        self.model.value(p, self.t)
    }

    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        let coords: Vec<[f64; 4]> = points.iter().map(|p| [p.x, p.y, p.z, self.t]).collect();
        self.model.values(&coords)
    }
}
