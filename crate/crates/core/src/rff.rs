//! Random Fourier features for the Gaussian kernel.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::kernels::{FactorSource, GramFactor};
use crate::{lit, Error, Real, Result};

/// Frequencies `W ~ N(0, σ⁻² I)` (one row per feature) and phases `b ~ U[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RffProjection<T: Real> {
    pub weights: DMatrix<T>,
    pub phases: DVector<T>,
    pub bandwidth: T,
    pub seed: u64,
}

/// Draws a projection from a ChaCha20 stream seeded by `seed`. Weights are
/// drawn row by row before the phases.
pub fn sample_projection<T: Real>(input_dim: usize, num_features: usize, bandwidth: T, seed: u64) -> Result<RffProjection<T>> {
    if input_dim == 0 {
        return Err(Error::param("input_dim", "must be positive"));
    }
    if num_features == 0 {
        return Err(Error::param("num_features", "must be positive"));
    }
    if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
        return Err(Error::param("bandwidth", "must be positive and finite"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let inv_bw = 1.0 / crate::to_f64(bandwidth);
    let mut w = DMatrix::zeros(num_features, input_dim);
    for i in 0..num_features {
        for j in 0..input_dim {
            let z: f64 = rng.sample(StandardNormal);
            w[(i, j)] = lit(z * inv_bw);
        }
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let phases = DVector::from_fn(num_features, |_, _| lit(rng.random::<f64>() * two_pi));
    Ok(RffProjection {
        weights: w,
        phases,
        bandwidth,
        seed,
    })
}

impl<T: Real> RffProjection<T> {
    pub fn num_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// `R_ij = sqrt(2/d) · cos(w_j · x_i + b_j)`, one row per sample.
    pub fn feature_matrix(&self, points: &DMatrix<T>) -> Result<DMatrix<T>> {
        if points.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "rff feature_matrix",
                expected: self.input_dim(),
                found: points.ncols(),
            });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rff feature_matrix"));
        }
        let d = self.num_features();
        let scale = (lit::<T>(2.0) / lit::<T>(d as f64)).sqrt();
        let mut proj = points * self.weights.transpose();
        for (j, mut col) in proj.column_iter_mut().enumerate() {
            let b = self.phases[j];
            for v in col.iter_mut() {
                *v = scale * (*v + b).cos();
            }
        }
        Ok(proj)
    }

    /// The feature matrix used directly as a Gram factor.
    pub fn factor(&self, points: &DMatrix<T>) -> Result<GramFactor<T>> {
        Ok(GramFactor {
            factor: self.feature_matrix(points)?,
            source: FactorSource::RffDirect,
        })
    }
}
