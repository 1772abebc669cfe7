//! Time-varying Bayesian optimization with uncertainty-injection forgetting.
//!
//! The surrogate is a spatio-temporal Gaussian process with a separable
//! product kernel: squared-exponential in the parameters and either a
//! Wiener-process kernel (uncertainty injection, non-mean-reverting) or a
//! stationary forgetting kernel (back-to-prior) in time. Convexity of the
//! objective can be enforced approximately through inequality constraints on
//! second derivatives at virtual observation points, sampled via truncated
//! multivariate normals.
//!
//! All numerical code is generic over the scalar type (`f32`/`f64`) through
//! [`scalar::Scalar`]; concrete `f64` aliases are exported below.

pub mod constrained;
pub mod deriv;
pub mod error;
pub mod fit;
pub mod gp;
pub mod kernels;
pub mod optimizer;
pub mod scalar;
pub mod special;
pub mod tmvn;
pub mod types;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

/// Concrete `f64` aliases for the common case.
pub type ParamPoint64 = types::ParamPoint<f64>;
pub type Observation64 = types::Observation<f64>;
pub type Dataset64 = types::Dataset<f64>;
pub type SpatialKernelParams64 = types::SpatialKernelParams<f64>;
pub type TemporalKernelParams64 = types::TemporalKernelParams<f64>;
pub type GpPosterior64 = types::GpPosterior<f64>;
pub type HyperPriors64 = types::HyperPriors<f64>;
pub type TrustRegion64 = optimizer::TrustRegion<f64>;
pub type OptimizerState64 = optimizer::OptimizerState<f64>;
