//! Marginal-likelihood hyperparameter fitting.
//!
//! Spatial lengthscales, output variance, and (optionally) the noise variance
//! are optimized in log space with Nelder-Mead. Temporal parameters are never
//! optimized; the forgetting factors stay fixed. The search is monotone by
//! contract: if no candidate improves on the initial parameters, the initial
//! parameters are returned.

use crate::error::{CoreError, Result};
use crate::gp::log_marginal_likelihood;
use crate::scalar::Scalar;
use crate::types::{Dataset, HyperPriors, SpatialKernelParams, TemporalKernelParams};
use nalgebra::DVector;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions<T: Scalar> {
    pub max_evals: usize,
    /// Optimize the noise variance alongside the spatial parameters.
    pub fit_noise: bool,
    pub noise_floor: T,
    /// Initial simplex displacement in log space.
    pub simplex_step: T,
    /// Upper bound on ln(output variance). Observations are normalized to
    /// unit variance, so the marginal variance is kept within an order of
    /// magnitude of 1; without this bound a single extreme observation can
    /// inflate the fitted variance by orders of magnitude and destabilize
    /// both the forgetting rate and the acquisition.
    pub max_log_output_variance: T,
    /// Lower bound on each lengthscale. Parameters live on the unit box, so
    /// lengthscales below the candidate-grid spacing describe variation the
    /// optimizer can never resolve; without the floor the likelihood can
    /// collapse one axis to a near-white-noise fit.
    pub min_lengthscale: T,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_evals: 250,
            fit_noise: true,
            noise_floor: T::of(1e-6),
            simplex_step: T::of(0.3),
            max_log_output_variance: T::of(2.5),
            min_lengthscale: T::of(0.05),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<T: Scalar> {
    pub spatial: SpatialKernelParams<T>,
    pub noise_variance: T,
    pub lml: T,
    /// False when the optimizer failed to improve and the initial parameters
    /// were returned unchanged.
    pub improved: bool,
}

const LOG_BOUND: f64 = 7.0;

fn decode<T: Scalar>(
    x: &[T],
    dim: usize,
    fit_noise: bool,
    fixed_noise: T,
    floor: T,
    max_log_out_var: T,
    min_ls: T,
) -> Option<(SpatialKernelParams<T>, T)> {
    if x.iter().any(|&v| v.as_f64().abs() > LOG_BOUND) {
        return None;
    }
    if x[dim] > max_log_out_var {
        return None;
    }
    let ls = DVector::from_iterator(dim, x[..dim].iter().map(|&v| v.exp().max(min_ls)));
    let out_var = x[dim].exp();
    let noise = if fit_noise { x[dim + 1].exp().max(floor) } else { fixed_noise };
    SpatialKernelParams::new(ls, out_var).ok().map(|sp| (sp, noise))
}

/// Fit spatial hyperparameters (and optionally noise) by maximizing the log
/// marginal likelihood including the Gamma prior terms.
pub fn fit_hyperparameters<T: Scalar>(
    data: &Dataset<T>,
    initial: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
    priors: &HyperPriors<T>,
    noise_variance: T,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    if data.len() < 2 {
        return Err(CoreError::DegenerateData(
            "hyperparameter fitting needs at least 2 records".into(),
        ));
    }
    let dim = initial.dim();

    let mut x0: Vec<T> = initial.lengthscales.iter().map(|l| l.ln()).collect();
    x0.push(initial.output_variance.ln());
    if opts.fit_noise {
        x0.push(noise_variance.max(opts.noise_floor).ln());
    }

    let mut evals = 0usize;
    let mut objective = |x: &[T]| -> T {
        evals += 1;
        match decode(
            x,
            dim,
            opts.fit_noise,
            noise_variance,
            opts.noise_floor,
            opts.max_log_output_variance,
            opts.min_lengthscale,
        ) {
            Some((sp, noise)) => match log_marginal_likelihood(data, &sp, tp, noise, priors) {
                Ok(lml) if crate::special::is_finite(lml) => -lml,
                _ => crate::special::infinity(),
            },
            None => crate::special::infinity(),
        }
    };

    let initial_neg = objective(&x0);
    let best_x = nelder_mead(&mut objective, &x0, opts.simplex_step, opts.max_evals);
    let best_neg = objective(&best_x);

    if best_neg < initial_neg {
        let (spatial, noise) = decode(
            &best_x,
            dim,
            opts.fit_noise,
            noise_variance,
            opts.noise_floor,
            opts.max_log_output_variance,
            opts.min_lengthscale,
        )
        .expect("best candidate decodes");
        Ok(FitResult { spatial, noise_variance: noise, lml: -best_neg, improved: true })
    } else {
        // no improvement found; keep the caller's parameters
        Ok(FitResult {
            spatial: initial.clone(),
            noise_variance,
            lml: -initial_neg,
            improved: false,
        })
    }
}

/// Minimal Nelder-Mead returning the best vertex seen. Standard coefficients
/// (reflect 1, expand 2, contract 1/2, shrink 1/2).
fn nelder_mead<T: Scalar>(
    f: &mut impl FnMut(&[T]) -> T,
    x0: &[T],
    step: T,
    max_evals: usize,
) -> Vec<T> {
    let n = x0.len();
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut used = n + 1;

    while used < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let centroid: Vec<T> = (0..n)
            .map(|j| {
                let mut s = T::zero();
                for v in &simplex[..n] {
                    s += v.0[j];
                }
                s / T::of(n as f64)
            })
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<T> = (0..n)
            .map(|j| centroid[j] + (centroid[j] - worst.0[j]))
            .collect();
        let fr = f(&reflect);
        used += 1;
        if fr < simplex[0].1 {
            let expand: Vec<T> = (0..n)
                .map(|j| centroid[j] + T::of(2.0) * (centroid[j] - worst.0[j]))
                .collect();
            let fe = f(&expand);
            used += 1;
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<T> = (0..n)
                .map(|j| centroid[j] + T::of(0.5) * (worst.0[j] - centroid[j]))
                .collect();
            let fc = f(&contract);
            used += 1;
            if fc < worst.1 {
                simplex[n] = (contract, fc);
            } else {
                // shrink toward best
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        v.0[j] = best[j] + T::of(0.5) * (v.0[j] - best[j]);
                    }
                    v.1 = f(&v.0);
                    used += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex[0].0.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::cholesky_with_jitter;
    use crate::kernels::gram_matrix;
    use crate::types::{Observation, ParamPoint};
    use rand::SeedableRng;

    #[test]
    fn recovers_synthetic_lengthscale_within_factor_two() {
        // sample 50 points from a known SE-kernel GP (lengthscale 1)
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let true_sp = SpatialKernelParams::isotropic(1, 1.0f64, 1.0).unwrap();
        let tp = TemporalKernelParams::TimeInvariant;
        let pts: Vec<ParamPoint<f64>> = (0..50)
            .map(|_| ParamPoint::new(DVector::from_vec(vec![rng.random::<f64>() * 6.0 - 3.0]), 0))
            .collect();
        let k = gram_matrix(&pts, &true_sp, &tp).unwrap();
        let (chol, _) = cholesky_with_jitter(&k, &Default::default()).unwrap();
        let z = DVector::from_iterator(
            50,
            (0..50).map(|_| crate::special::standard_normal_f64(&mut rng)),
        );
        let y = chol.l() * z;
        let mut data = Dataset::new();
        for (p, &v) in pts.iter().zip(y.iter()) {
            data.push(Observation::new(p.clone(), v, true, false).unwrap()).unwrap();
        }

        let initial = SpatialKernelParams::isotropic(1, 0.25f64, 0.5).unwrap();
        // flat-ish prior so the synthetic recovery is likelihood-driven
        let priors = HyperPriors::new(vec![(1.1f64, 0.5)]).unwrap();
        let fit = fit_hyperparameters(
            &data,
            &initial,
            &tp,
            &priors,
            0.01,
            &FitOptions { max_evals: 400, ..Default::default() },
        )
        .unwrap();
        let l = fit.spatial.lengthscales[0];
        assert!(l > 0.5 && l < 2.0, "recovered lengthscale {l} outside [0.5, 2]");
    }

    #[test]
    fn fixed_point_and_monotone_improvement() {
        let tp = TemporalKernelParams::ui(0.03f64).unwrap();
        let priors = HyperPriors::default_normalized(1);
        let mut data = Dataset::new();
        for (i, y) in [0.1, -0.4, 0.9, 0.2, -0.3].iter().enumerate() {
            data.push(
                Observation::new(
                    ParamPoint::new(DVector::from_vec(vec![i as f64 / 4.0]), i as u32),
                    *y,
                    true,
                    false,
                )
                .unwrap(),
            )
            .unwrap();
        }
        let initial = SpatialKernelParams::isotropic(1, 0.5f64, 1.0).unwrap();
        let noise = 0.1;
        let before = log_marginal_likelihood(&data, &initial, &tp, noise, &priors).unwrap();
        let fit =
            fit_hyperparameters(&data, &initial, &tp, &priors, noise, &Default::default()).unwrap();
        assert!(fit.lml >= before, "fit must never decrease the objective");

        // restarting from the optimum keeps the objective within 1e-9
        let refit = fit_hyperparameters(
            &data,
            &fit.spatial,
            &tp,
            &priors,
            fit.noise_variance,
            &Default::default(),
        )
        .unwrap();
        assert!(refit.lml >= fit.lml - 1e-9);
    }

    #[test]
    fn rejects_tiny_datasets() {
        let tp = TemporalKernelParams::TimeInvariant;
        let priors = HyperPriors::default_normalized(1);
        let initial = SpatialKernelParams::isotropic(1, 0.5f64, 1.0).unwrap();
        let mut data = Dataset::new();
        data.push(
            Observation::new(ParamPoint::new(DVector::from_vec(vec![0.0]), 0), 0.0, true, false)
                .unwrap(),
        )
        .unwrap();
        assert!(
            fit_hyperparameters(&data, &initial, &tp, &priors, 0.1, &Default::default()).is_err()
        );
    }
}
