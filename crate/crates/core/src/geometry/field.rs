use crate::Vec3;
use rayon::prelude::*;

/// A scalar field over space, typically a signed distance function frozen at
/// one time.
pub trait ScalarField: Sync {
    fn value(&self, p: &Vec3) -> f64;

    /// Batched evaluation; implementations with a faster batched path
    /// override this. Output order matches input order.
    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|p| self.value(p)).collect()
    }
}

impl<F> ScalarField for F
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    fn value(&self, p: &Vec3) -> f64 {
        self(p)
    }
}

/// `inner` translated by `offset`: `value(p) = inner(p - offset)`.
pub struct Shifted<'a, F: ?Sized> {
    pub inner: &'a F,
    pub offset: Vec3,
}

impl<F: ScalarField + ?Sized> ScalarField for Shifted<'_, F> {
    fn value(&self, p: &Vec3) -> f64 {
        self.inner.value(&(p - self.offset))
    }

    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        let moved: Vec<Vec3> = points.iter().map(|p| p - self.offset).collect();
        self.inner.values(&moved)
    }
}
