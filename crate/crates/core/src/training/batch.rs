use super::{OnSurfaceBatch, TrainingConfig};
use crate::geometry::NormalizedSequence;
use crate::nn::{LossBatch, SpaceTimePoint};
use crate::{Error, Result, Vec3};
use rand::seq::index;
use rand::Rng;

fn uniform_in_cube<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
    )
}

/// Draws one training batch from a normalized sequence.
///
/// Surface points keep their scan time. For scan `j` contributing `n_j`
/// surface points, `ratio * n_j` uniform spatial samples are placed at `t_j`.
/// The regularization set has `ratio * sum(n_j)` uniform spatial samples
/// spread round-robin over `n_reg_times_per_step` uniform times.
pub fn sample_batch<R: Rng + ?Sized>(
    seq: &NormalizedSequence,
    cfg: &TrainingConfig,
    rng: &mut R,
) -> Result<LossBatch> {
    if seq.scans.is_empty() || seq.scans.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidSequence("cannot sample from an empty sequence".into()));
    }
    let ratio = cfg.off_surface_per_on_surface;
    let mut batch = LossBatch::default();
    for scan in &seq.scans {
        let chosen: Vec<Vec3> = match cfg.on_surface_batch {
            OnSurfaceBatch::PerScan(k) if k < scan.points.len() => index::sample(rng, scan.points.len(), k)
                .into_iter()
                .map(|i| scan.points[i])
                .collect(),
            _ => scan.points.clone(),
        };
        for p in &chosen {
            let q = SpaceTimePoint::new(*p, scan.t);
            if !q.in_domain() {
                return Err(Error::InvalidSequence(format!(
                    "surface point {:?} at t = {} lies outside the normalized domain",
                    p, scan.t
                )));
            }
            batch.on_surface.push(q);
        }
        let n_off = (ratio * chosen.len() as f64).round() as usize;
        for _ in 0..n_off {
            batch.off_surface_data.push(SpaceTimePoint::new(uniform_in_cube(rng), scan.t));
        }
    }
    let n_reg = (ratio * batch.on_surface.len() as f64).round() as usize;
    let times: Vec<f64> = (0..cfg.n_reg_times_per_step)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    for i in 0..n_reg {
        batch
            .off_surface_reg
            .push(SpaceTimePoint::new(uniform_in_cube(rng), times[i % times.len()]));
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NormalizationTransform, NormalizedScan};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(sizes: &[usize]) -> NormalizedSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        NormalizedSequence {
            patient_id: "s".into(),
            scans: sizes
                .iter()
                .enumerate()
                .map(|(j, &n)| NormalizedScan {
                    t: -1.0 + 2.0 * j as f64 / (sizes.len() - 1).max(1) as f64,
                    points: (0..n).map(|_| uniform_in_cube(&mut rng) * 0.9).collect(),
                })
                .collect(),
            transform: NormalizationTransform::identity(),
            single_scan: false,
        }
    }

    #[test]
    fn full_cloud_counts() {
        let b = sample_batch(&seq(&[100, 200]), &TrainingConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(b.on_surface.len(), 300);
        assert_eq!(b.off_surface_data.len(), 300);
        assert_eq!(b.off_surface_reg.len(), 300);
        let reg_times: std::collections::BTreeSet<u64> = b.off_surface_reg.iter().map(|p| p.t.to_bits()).collect();
        assert_eq!(reg_times.len(), 4);
        assert_eq!(b.off_surface_data.iter().filter(|p| p.t == -1.0).count(), 100);
    }

    #[test]
    fn subset_per_scan() {
        let cfg = TrainingConfig { on_surface_batch: OnSurfaceBatch::PerScan(50), ..Default::default() };
        let b = sample_batch(&seq(&[100, 20]), &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(b.on_surface.len(), 70);
    }

    #[test]
    fn all_points_in_domain() {
        let s = seq(&[1000, 1000]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = TrainingConfig::default();
        let mut n = 0;
        while n < 1_000_000 {
            let b = sample_batch(&s, &cfg, &mut rng).unwrap();
            for p in b.on_surface.iter().chain(&b.off_surface_data).chain(&b.off_surface_reg) {
                assert!(p.in_domain());
                n += 1;
            }
        }
    }

    #[test]
    fn seeds_change_regularization_samples() {
        let s = seq(&[30, 30]);
        let cfg = TrainingConfig::default();
        let a = sample_batch(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_batch(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let again = sample_batch(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_ne!(a.off_surface_reg, b.off_surface_reg);
        assert_eq!(a, again);
    }

    #[test]
    fn empty_sequence_rejected() {
        let mut s = seq(&[3]);
        s.scans.clear();
        assert!(sample_batch(&s, &TrainingConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
