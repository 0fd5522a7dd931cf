use super::{adam_step, sample_batch, AdamState, Initialization, PointCloudSequence, TrainingConfig};
use crate::geometry::{normalize_sequence, NormalizedSequence};
use crate::model::TemporalSdfModel;
use crate::nn::{init_params, init_sphere_params, loss_and_param_grad, LossBreakdown, MlpConfig};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trained model and the per-epoch loss history.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: TemporalSdfModel,
    pub history: Vec<LossBreakdown>,
}

/// Normalizes `seq` and fits a model to it.
pub fn fit(seq: &PointCloudSequence, mlp: &MlpConfig, cfg: &TrainingConfig) -> Result<FitOutcome> {
    if seq.len() < 2 {
        return Err(Error::InvalidSequence(format!(
            "fitting needs at least 2 scans, got {}",
            seq.len()
        )));
    }
    cfg.validate()?;
    let normalized = normalize_sequence(seq, cfg.padding)?;
    fit_normalized(&normalized, mlp, cfg, |_, _| {})
}

/// Fits a model to an already normalized sequence. `on_epoch` observes every
/// epoch's loss before the parameter update.
///
/// Fully deterministic for a given `cfg.rng_seed`: parameters are initialized
/// from the seed and batches come from a separate stream of the same seed.
pub fn fit_normalized(
    seq: &NormalizedSequence,
    mlp: &MlpConfig,
    cfg: &TrainingConfig,
    mut on_epoch: impl FnMut(usize, &LossBreakdown),
) -> Result<FitOutcome> {
    cfg.validate()?;
    mlp.validate()?;
    let mut params = match cfg.initialization {
        Initialization::FanIn => init_params(mlp, cfg.rng_seed)?,
        Initialization::Sphere(r) => init_sphere_params(mlp, cfg.rng_seed, r)?,
    };
    let mut flat = params.to_flat();
    let mut state = AdamState::new(flat.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(1);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let batch = sample_batch(seq, cfg, &mut rng)?;
        let (loss, grad) = match loss_and_param_grad(&params, mlp, &batch, &cfg.weights) {
            Ok(v) => v,
            Err(Error::NonFiniteLoss) => return Err(Error::Diverged { epoch }),
            Err(e) => return Err(e),
        };
        on_epoch(epoch, &loss);
        history.push(loss);
        match adam_step(&mut flat, &grad, &mut state, cfg) {
            Ok(()) => {}
            Err(Error::NonFiniteGradient(_)) => return Err(Error::Diverged { epoch }),
            Err(e) => return Err(e),
        }
        params.assign_flat(&flat)?;
    }

    Ok(FitOutcome {
        model: TemporalSdfModel::new(mlp.clone(), params, seq.transform)?,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{make_sequence, AnalyticShape};
    use crate::training::OnSurfaceBatch;

    fn small() -> (PointCloudSequence, MlpConfig, TrainingConfig) {
        let shape = AnalyticShape::growing_sphere(0.5, 0.1).unwrap();
        let seq = make_sequence(&shape, &[0.0, 100.0, 200.0], 200, 5).unwrap();
        let mlp = MlpConfig::new(2, 16, 2).unwrap();
        let cfg = TrainingConfig {
            epochs: 30,
            learning_rate: 1e-3,
            on_surface_batch: OnSurfaceBatch::PerScan(64),
            rng_seed: 3,
            ..Default::default()
        };
        (seq, mlp, cfg)
    }

    #[test]
    fn fit_is_reproducible() {
        let (seq, mlp, cfg) = small();
        let a = fit(&seq, &mlp, &cfg).unwrap();
        let b = fit(&seq, &mlp, &cfg).unwrap();
        assert_eq!(a.model.params().to_flat(), b.model.params().to_flat());
        assert_eq!(a.history, b.history);
        assert_eq!(a.history.len(), 30);
    }

    #[test]
    fn history_totals_are_weighted_sums() {
        let (seq, mlp, cfg) = small();
        let out = fit(&seq, &mlp, &cfg).unwrap();
        let w = cfg.weights;
        for l in &out.history {
            let expect = l.data_abs
                + w.lambda1 * l.eikonal_data
                + w.lambda2 * l.temporal_data
                + w.lambda3 * l.eikonal_reg
                + w.lambda4 * l.temporal_reg;
            assert_eq!(l.total, expect);
        }
    }

    #[test]
    fn divergence_reports_epoch() {
        let (seq, mlp, mut cfg) = small();
        cfg.learning_rate = 1e200;
        cfg.epochs = 50;
        match fit(&seq, &mlp, &cfg) {
            Err(Error::Diverged { epoch }) => assert!(epoch > 0),
            other => panic!("expected divergence, got {:?}", other.map(|o| o.history.len())),
        }
    }

    #[test]
    fn single_scan_rejected() {
        let (seq, mlp, cfg) = small();
        let one = PointCloudSequence::from_scans_unchecked("x", seq.scans()[..1].to_vec());
        assert!(fit(&one, &mlp, &cfg).is_err());
    }
}
