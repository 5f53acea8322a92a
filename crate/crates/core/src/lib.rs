//! Closed-form kernel invariant representation learning.
//!
//! Given input data `X`, a target `Y` and a semantic attribute `S`, this crate
//! computes encoders `Z = f(X)` in an RKHS that maximize
//! `(1 - λ)·Dep(Z, Y) - λ·Dep(Z, S)` subject to a whitening constraint on `Z`.
//! The optimum is a generalized symmetric eigenproblem, so every point on the
//! utility–invariance trade-off curve is obtained exactly rather than by
//! adversarial training.
//!
//! The numerical core ([`kernels`], [`rff`], [`dependence`], [`solver`]) is
//! generic over the scalar type through [`Real`]; `f64` aliases are exported at
//! the crate root. Data handling, trade-off sweeps and serialization work in
//! `f64`.
//!
//! ```
//! use kirl::{data, solver, config::KernelConfig};
//!
//! let toy = data::gen_gaussian_toy(300, 7).unwrap();
//! let cfg = KernelConfig::default();
//! let model = solver::fit_encoder(&toy, &cfg, 0.5, 1e-3, None).unwrap();
//! assert!(model.r() <= model.eigenvalues().len());
//! ```

pub mod config;
pub mod data;
pub mod dependence;
pub mod error;
pub mod kernels;
pub mod model_io;
pub mod pipeline;
pub mod rff;
pub mod solver;
pub mod tradeoff;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub use error::{Error, ErrorKind, Result};

/// Scalar type accepted by the numerical core.
///
/// Implemented for `f32` and `f64`. The documented tolerances are calibrated
/// for `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub type KernelSpecF64 = kernels::KernelSpec<f64>;
pub type GramFactorF64 = kernels::GramFactor<f64>;
pub type RffProjectionF64 = rff::RffProjection<f64>;
pub type EigenPencilF64 = solver::EigenPencil<f64>;
pub type EigenSolutionF64 = solver::EigenSolution<f64>;
pub type EncoderModelF64 = solver::EncoderModel<f64>;

pub type KernelSpecF32 = kernels::KernelSpec<f32>;
pub type GramFactorF32 = kernels::GramFactor<f32>;
pub type EncoderModelF32 = solver::EncoderModel<f32>;

pub use dependence::DependenceReport;
pub use tradeoff::{TradeoffCurve, TradeoffPoint};
