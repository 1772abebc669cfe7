//! Domain types shared across the GP machinery and the optimization loop.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// A parameter vector tagged with the optimization time step it belongs to.
/// Time steps count TVBO iterations, not simulation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint<T: Scalar> {
    pub theta: DVector<T>,
    pub t: u32,
}

impl<T: Scalar> ParamPoint<T> {
    pub fn new(theta: DVector<T>, t: u32) -> Self {
        Self { theta, t }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// One (possibly imputed) observation of the normalized objective.
#[derive(Debug, Clone)]
pub struct Observation<T: Scalar> {
    pub point: ParamPoint<T>,
    /// Normalized objective value.
    pub y: T,
    pub stable: bool,
    /// True when `y` came from unstable-observation imputation.
    pub imputed: bool,
}

impl<T: Scalar> Observation<T> {
    pub fn new(point: ParamPoint<T>, y: T, stable: bool, imputed: bool) -> Result<Self> {
        if imputed && stable {
            return Err(CoreError::InvalidArgument(
                "imputed observation must be flagged unstable".into(),
            ));
        }
        if !crate::special::is_finite(y) {
            return Err(CoreError::InvalidArgument(
                "observation value must be finite".into(),
            ));
        }
        Ok(Self { point, y, stable, imputed })
    }
}

/// Ordered observations feeding the surrogate. Timestamps are non-decreasing;
/// the initial set may share one timestamp.
#[derive(Debug, Clone, Default)]
pub struct Dataset<T: Scalar> {
    records: Vec<Observation<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new() -> Self {
        Self { records: Vec::new() }
    }

    pub fn push(&mut self, obs: Observation<T>) -> Result<()> {
        if let Some(last) = self.records.last() {
            if obs.point.t < last.point.t {
                return Err(CoreError::InvalidArgument(format!(
                    "timestamps must be non-decreasing: {} after {}",
                    obs.point.t, last.point.t
                )));
            }
            if obs.point.dim() != last.point.dim() {
                return Err(CoreError::DimensionMismatch(format!(
                    "observation dim {} != dataset dim {}",
                    obs.point.dim(),
                    last.point.dim()
                )));
            }
        }
        self.records.push(obs);
        Ok(())
    }

    pub fn records(&self) -> &[Observation<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn points(&self) -> Vec<ParamPoint<T>> {
        self.records.iter().map(|r| r.point.clone()).collect()
    }

    pub fn values(&self) -> DVector<T> {
        DVector::from_iterator(self.records.len(), self.records.iter().map(|r| r.y))
    }

    /// Keep only the `window` most recent records (engineering escape hatch
    /// for long horizons; off by default).
    pub fn truncate_to_window(&mut self, window: usize) {
        if self.records.len() > window {
            self.records.drain(..self.records.len() - window);
        }
    }
}

/// Squared-exponential spatial kernel parameters. `lengthscales[i]` is the
/// per-dimension scale sigma_{l,i} (entering the kernel squared).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialKernelParams<T: Scalar> {
    pub lengthscales: DVector<T>,
    pub output_variance: T,
}

impl<T: Scalar> SpatialKernelParams<T> {
    pub fn new(lengthscales: DVector<T>, output_variance: T) -> Result<Self> {
        if lengthscales.iter().any(|&l| l <= T::zero()) || output_variance <= T::zero() {
            return Err(CoreError::InvalidArgument(
                "lengthscales and output variance must be positive".into(),
            ));
        }
        Ok(Self { lengthscales, output_variance })
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn isotropic(dim: usize, lengthscale: T, output_variance: T) -> Result<Self> {
        Self::new(DVector::from_element(dim, lengthscale), output_variance)
    }
}

/// Temporal kernel selecting the forgetting strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalKernelParams<T: Scalar> {
    /// Wiener-process kernel sigma_w^2 (min(t,t') - c0). `c0 = -1/sigma_w^2`
    /// is enforced at construction so the kernel equals 1 whenever one
    /// argument is 0.
    Ui { sigma_w_sq: T, c0: T },
    /// Stationary mean-reverting kernel (1-eps)^{|t-t'|/2}.
    B2p { epsilon: T },
    TimeInvariant,
}

impl<T: Scalar> TemporalKernelParams<T> {
    pub fn ui(sigma_w_sq: T) -> Result<Self> {
        if sigma_w_sq <= T::zero() {
            return Err(CoreError::InvalidArgument("sigma_w_sq must be positive".into()));
        }
        Ok(Self::Ui { sigma_w_sq, c0: -T::one() / sigma_w_sq })
    }

    pub fn b2p(epsilon: T) -> Result<Self> {
        if epsilon <= T::zero() || epsilon >= T::one() {
            return Err(CoreError::InvalidArgument("epsilon must lie in (0,1)".into()));
        }
        Ok(Self::B2p { epsilon })
    }
}

/// Predictive distribution over a set of query points.
#[derive(Debug, Clone)]
pub struct GpPosterior<T: Scalar> {
    pub mean: DVector<T>,
    pub covariance: DMatrix<T>,
}

impl<T: Scalar> GpPosterior<T> {
    pub fn variances(&self) -> DVector<T> {
        self.covariance.diagonal()
    }

    pub fn stds(&self) -> DVector<T> {
        self.covariance.diagonal().map(|v| v.max(T::zero()).sqrt())
    }
}

/// Per-dimension Gamma priors on the spatial lengthscales.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPriors<T: Scalar> {
    /// (shape, rate) per lengthscale dimension.
    pub lengthscale_gamma: Vec<(T, T)>,
}

impl<T: Scalar> HyperPriors<T> {
    pub fn new(lengthscale_gamma: Vec<(T, T)>) -> Result<Self> {
        if lengthscale_gamma
            .iter()
            .any(|&(a, b)| a <= T::zero() || b <= T::zero())
        {
            return Err(CoreError::InvalidArgument(
                "gamma shape and rate must be positive".into(),
            ));
        }
        Ok(Self { lengthscale_gamma })
    }

    /// Default priors on a normalized [0,1]^D domain: Gamma(3, 6) per
    /// dimension, concentrating mass on moderate lengthscales.
    pub fn default_normalized(dim: usize) -> Self {
        Self {
            lengthscale_gamma: vec![(T::of(3.0), T::of(6.0)); dim],
        }
    }
}
