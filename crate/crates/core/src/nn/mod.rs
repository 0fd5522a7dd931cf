//! The space-time MLP `f(x, t)` and its differentiation engine.
//!
//! Evaluation runs on column-batched activations. When input gradients are
//! requested, each sample carries four extra tangent columns (one per input
//! axis) through the same layers; the ReLU masks of the value column are
//! applied to the tangents, so the tangent outputs are the exact partial
//! derivatives of the network. A reverse sweep over the recorded trace then
//! yields parameter gradients of any loss built from values and tangents,
//! which is what the Eikonal and temporal penalties need.
//!
//! Subgradient conventions: `relu'(0) = 0` and `d|u|/du = 0` at `u = 0`.

mod config;
mod engine;
mod loss;
mod params;

pub use config::{Activation, MlpConfig, INPUT_DIM};
pub use engine::{evaluate_batch, forward, forward_with_input_grad, min_abs_preactivation};
pub use loss::{loss_and_param_grad, LossBatch, LossBreakdown, LossWeights};
pub use params::{init_params, init_sphere_params, Layer, ParameterSet};

use crate::Vec3;
use serde::{Deserialize, Serialize};

/// A coordinate in the normalized space-time domain `[-1, 1]^3 x [-1, 1]`.
///
/// Points outside the domain are accepted for evaluation; samplers never
/// emit them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec3,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec3, t: f64) -> Self {
        Self { x, t }
    }

    pub fn to_array(&self) -> [f64; INPUT_DIM] {
        [self.x[0], self.x[1], self.x[2], self.t]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite()) && self.t.is_finite()
    }

    pub fn in_domain(&self) -> bool {
        self.to_array().iter().all(|v| (-1.0..=1.0).contains(v))
    }
}

/// Network value together with its derivatives with respect to the inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfEvaluation {
    pub value: f64,
    pub grad_x: Vec3,
    pub grad_t: f64,
}

/// Documents the fixed subgradient conventions at non-differentiable points.
pub fn subgradient_convention() -> &'static str {
    "relu'(0) = 0; d|u|/du = 0 at u = 0; the Eikonal direction g/|g| is taken as 0 when g = 0"
}

/// Sign with `sign(0) = 0`.
#[inline]
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
