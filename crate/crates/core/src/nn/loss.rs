use super::engine::{Trace, CHUNK, FULL_BLOCKS};
use super::{sign0, MlpConfig, ParameterSet, SpaceTimePoint, INPUT_DIM};
use crate::{Error, Result};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Coefficients of the four gradient penalties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Eikonal penalty at scan times.
    pub lambda1: f64,
    /// Temporal-gradient penalty at scan times.
    pub lambda2: f64,
    /// Eikonal penalty at regularization times.
    pub lambda3: f64,
    /// Temporal-gradient penalty at regularization times.
    pub lambda4: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            lambda2: 0.1,
            lambda3: 0.1,
            lambda4: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if all.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidTraining(format!(
                "loss weights must be finite and non-negative, got {all:?}"
            )))
        }
    }
}

/// One Monte Carlo batch of the training loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossBatch {
    /// Surface points, each paired with its scan time.
    pub on_surface: Vec<SpaceTimePoint>,
    /// Uniform spatial samples at scan times.
    pub off_surface_data: Vec<SpaceTimePoint>,
    /// Uniform spatial samples at regularization times.
    pub off_surface_reg: Vec<SpaceTimePoint>,
}

/// The five loss components and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub data_abs: f64,
    pub eikonal_data: f64,
    pub temporal_data: f64,
    pub eikonal_reg: f64,
    pub temporal_reg: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Builds a breakdown whose total is the weighted sum of the components.
    pub fn from_components(
        data_abs: f64,
        eikonal_data: f64,
        temporal_data: f64,
        eikonal_reg: f64,
        temporal_reg: f64,
        w: &LossWeights,
    ) -> Self {
        let total = data_abs
            + w.lambda1 * eikonal_data
            + w.lambda2 * temporal_data
            + w.lambda3 * eikonal_reg
            + w.lambda4 * temporal_reg;
        Self {
            data_abs,
            eikonal_data,
            temporal_data,
            eikonal_reg,
            temporal_reg,
            total,
        }
    }

    pub fn components(&self) -> [f64; 6] {
        [
            self.data_abs,
            self.eikonal_data,
            self.temporal_data,
            self.eikonal_reg,
            self.temporal_reg,
            self.total,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy)]
enum Role {
    Surface,
    Data,
    Reg,
}

struct Task<'a> {
    role: Role,
    points: &'a [SpaceTimePoint],
}

struct Partial {
    /// Sum of |f| (surface) or of Eikonal residuals (off-surface).
    first: f64,
    /// Sum of |df/dt| (off-surface only).
    second: f64,
    grad: Vec<f64>,
}

/// Waves of chunks processed in parallel before an in-order reduction.
const WAVE: usize = 8;

/// Evaluates the training loss and its exact gradient with respect to the
/// flat parameter vector.
///
/// The data term is the mean of `|f|` over surface points. Each penalty is
/// the mean over its sample set of `(|grad_x f| - 1)^2` or `|df/dt|`; an empty
/// off-surface set contributes zero. Gradients of the penalties flow through
/// the input derivatives, i.e. they are second-order in the network.
pub fn loss_and_param_grad(
    params: &ParameterSet,
    config: &MlpConfig,
    batch: &LossBatch,
    weights: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>)> {
    params.check(config)?;
    weights.validate()?;
    if batch.on_surface.is_empty() {
        return Err(Error::EmptyBatch("no on-surface points".into()));
    }

    let n_on = batch.on_surface.len() as f64;
    let n_data = batch.off_surface_data.len().max(1) as f64;
    let n_reg = batch.off_surface_reg.len().max(1) as f64;

    let tasks: Vec<Task<'_>> = batch
        .on_surface
        .chunks(CHUNK)
        .map(|points| Task { role: Role::Surface, points })
        .chain(batch.off_surface_data.chunks(CHUNK).map(|points| Task { role: Role::Data, points }))
        .chain(batch.off_surface_reg.chunks(CHUNK).map(|points| Task { role: Role::Reg, points }))
        .collect();

    let run = |task: &Task<'_>| -> Partial {
        let coords: Vec<[f64; INPUT_DIM]> = task.points.iter().map(|p| p.to_array()).collect();
        let n = coords.len();
        let mut grad = vec![0.0; params.len()];
        match task.role {
            Role::Surface => {
                let trace = Trace::record(params, config, &coords, false);
                let mut seed = Array2::zeros((1, n));
                let mut sum = 0.0;
                for i in 0..n {
                    let f = trace.value(i);
                    sum += f.abs();
                    seed[[0, i]] = sign0(f) / n_on;
                }
                trace.backward(params, config, seed.view(), &mut grad);
                Partial { first: sum, second: 0.0, grad }
            }
            Role::Data | Role::Reg => {
                let (eik_w, temp_w, count) = match task.role {
                    Role::Data => (weights.lambda1, weights.lambda2, n_data),
                    _ => (weights.lambda3, weights.lambda4, n_reg),
                };
                let trace = Trace::record(params, config, &coords, true);
                let mut seed = Array2::zeros((1, FULL_BLOCKS * n));
                let (mut eik_sum, mut temp_sum) = (0.0, 0.0);
                for i in 0..n {
                    let g = [trace.tangent(i, 0), trace.tangent(i, 1), trace.tangent(i, 2)];
                    let gt = trace.tangent(i, 3);
                    let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                    let residual = norm - 1.0;
                    eik_sum += residual * residual;
                    temp_sum += gt.abs();
                    if norm > 0.0 {
                        let scale = eik_w / count * 2.0 * residual / norm;
                        for k in 0..3 {
                            seed[[0, (k + 1) * n + i]] = scale * g[k];
                        }
                    }
                    seed[[0, 4 * n + i]] = temp_w / count * sign0(gt);
                }
                trace.backward(params, config, seed.view(), &mut grad);
                Partial { first: eik_sum, second: temp_sum, grad }
            }
        }
    };

    let mut sums = [0.0; 5];
    let mut grad = vec![0.0; params.len()];
    for wave in tasks.chunks(WAVE) {
        let partials: Vec<Partial> = wave.par_iter().map(run).collect();
        for (task, part) in wave.iter().zip(partials) {
            match task.role {
                Role::Surface => sums[0] += part.first,
                Role::Data => {
                    sums[1] += part.first;
                    sums[2] += part.second;
                }
                Role::Reg => {
                    sums[3] += part.first;
                    sums[4] += part.second;
                }
            }
            for (g, p) in grad.iter_mut().zip(&part.grad) {
                *g += p;
            }
        }
    }

    let breakdown = LossBreakdown::from_components(
        sums[0] / n_on,
        sums[1] / n_data,
        sums[2] / n_data,
        sums[3] / n_reg,
        sums[4] / n_reg,
        weights,
    );
    if !breakdown.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((breakdown, grad))
}
