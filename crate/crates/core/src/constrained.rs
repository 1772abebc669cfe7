//! Convexity-constrained GP posterior.
//!
//! Non-negative second directional derivatives are enforced at a finite set of
//! virtual observation points (VOPs) placed on an equidistant grid inside the
//! trust region, at the single time slice being optimized. The constrained
//! derivative posterior is a truncated multivariate normal; function values at
//! query points are then drawn from the Gaussian conditional on data and each
//! derivative sample.

use crate::deriv::{constraint_gram, data_constraint_gram, ConstraintSite};
use crate::error::{CoreError, Result};
use crate::gp::{cholesky_with_jitter, posterior, JitterPolicy};
use crate::kernels::{cross_gram, gram_matrix};
use crate::optimizer::TrustRegion;
use crate::scalar::Scalar;
use crate::special::standard_normal_f64;
use crate::tmvn::{
    sample_truncated_mvn_auto, SamplerKind, TmvnDiagnostics, TmvnOptions,
};
use crate::types::{Dataset, ParamPoint, SpatialKernelParams, TemporalKernelParams};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Locations and dimension indices where the second-derivative lower bound is
/// enforced, all at one time slice.
#[derive(Debug, Clone)]
pub struct VirtualObservationSet<T: Scalar> {
    pub locations: Vec<DVector<T>>,
    pub dims: Vec<usize>,
    pub t_slice: u32,
    pub lower_bound: T,
}

impl<T: Scalar> VirtualObservationSet<T> {
    pub fn constraint_count(&self) -> usize {
        self.locations.len() * self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraint_count() == 0
    }

    /// Flattened (location, dim) constraint sites, location-major.
    pub fn sites(&self) -> Vec<ConstraintSite<T>> {
        let mut out = Vec::with_capacity(self.constraint_count());
        for loc in &self.locations {
            for &dim in &self.dims {
                out.push(ConstraintSite { location: loc.clone(), dim, t: self.t_slice });
            }
        }
        out
    }
}

/// Equidistant VOP grid spanning `region` (inclusive endpoints), one
/// convexity constraint per dimension per location. Degenerate (zero-width)
/// axes collapse to a single coordinate without emitting duplicates.
pub fn place_vops<T: Scalar>(
    region: &TrustRegion<T>,
    per_dim: usize,
    t_next: u32,
    budget: usize,
) -> Result<VirtualObservationSet<T>> {
    if per_dim < 2 {
        return Err(CoreError::InvalidArgument("per_dim must be at least 2".into()));
    }
    let d = region.lower.len();
    let axes: Vec<Vec<T>> = (0..d)
        .map(|i| {
            let lo = region.lower[i];
            let hi = region.upper[i];
            if hi <= lo {
                vec![lo]
            } else {
                (0..per_dim)
                    .map(|k| {
                        lo + (hi - lo) * T::of(k as f64) / T::of((per_dim - 1) as f64)
                    })
                    .collect()
            }
        })
        .collect();
    let mut locations = vec![DVector::<T>::zeros(d)];
    for (i, axis) in axes.iter().enumerate() {
        let mut next = Vec::with_capacity(locations.len() * axis.len());
        for loc in &locations {
            for &v in axis {
                let mut l = loc.clone();
                l[i] = v;
                next.push(l);
            }
        }
        locations = next;
    }
    let count = locations.len() * d;
    if count > budget {
        return Err(CoreError::BudgetExceeded(format!(
            "{count} constraints exceed sampler budget {budget}"
        )));
    }
    Ok(VirtualObservationSet { locations, dims: (0..d).collect(), t_slice: t_next, lower_bound: T::zero() })
}

/// Function-value draws from the constrained posterior at the query points,
/// one row per sample, with empirical per-query summaries.
#[derive(Debug, Clone)]
pub struct ConstrainedPosteriorSamples<T: Scalar> {
    pub samples: DMatrix<T>,
    pub mean_estimate: DVector<T>,
    pub std_estimate: DVector<T>,
    pub diagnostics: TmvnDiagnostics,
}

/// Draws from the GP posterior at `queries` conditioned on the data and on
/// second-derivative values at the VOPs lying in `[lower_bound, inf)`.
///
/// With an empty VOP set the pipeline reduces to the unconstrained posterior;
/// the summaries then come from the analytic posterior rather than the
/// empirical moments.
#[allow(clippy::too_many_arguments)]
pub fn constrained_posterior_samples<T: Scalar>(
    data: &Dataset<T>,
    vops: &VirtualObservationSet<T>,
    queries: &[ParamPoint<T>],
    sp: &SpatialKernelParams<T>,
    tp: &TemporalKernelParams<T>,
    noise_variance: T,
    n_samples: usize,
    tmvn_opts: &TmvnOptions,
    rng_seed: u64,
) -> Result<ConstrainedPosteriorSamples<T>> {
    if n_samples == 0 {
        return Err(CoreError::InvalidArgument("n_samples must be at least 1".into()));
    }
    let q = queries.len();
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed.wrapping_add(0x9e3779b97f4a7c15));

    if vops.is_empty() {
        let post = posterior(data, queries, sp, tp, noise_variance)?;
        let lq = covariance_sqrt(&post.covariance)?;
        let mut samples = DMatrix::zeros(n_samples, q);
        for s in 0..n_samples {
            let xi = DVector::from_iterator(q, (0..q).map(|_| T::of(standard_normal_f64(&mut rng))));
            let draw = &post.mean + &lq * xi;
            samples.row_mut(s).copy_from(&draw.transpose());
        }
        let std_estimate = post.stds();
        return Ok(ConstrainedPosteriorSamples {
            samples,
            mean_estimate: post.mean,
            std_estimate,
            diagnostics: TmvnDiagnostics {
                kind: SamplerKind::None,
                acceptance_rate: 1.0,
                condition_estimate: 1.0,
                dim: 0,
            },
        });
    }

    let sites = vops.sites();
    let m = sites.len();
    let n = data.len();
    let pts = data.points();
    let y = data.values();

    let kcc = constraint_gram(&sites, sp, tp)?;
    let kcq = {
        let mut kk = DMatrix::zeros(m, q);
        for (r, s) in sites.iter().enumerate() {
            for (c, qp) in queries.iter().enumerate() {
                let site_pt = ParamPoint::new(s.location.clone(), s.t);
                kk[(r, c)] =
                    crate::deriv::kernel_second_derivatives(&site_pt, qp, s.dim, None, sp, tp)?;
            }
        }
        kk
    };
    let kqq = gram_matrix(queries, sp, tp)?;

    // derivative posterior given the data (prior if no data)
    let (mu_c, sigma_c, kbb, kbq, b_len) = if n == 0 {
        (DVector::zeros(m), kcc.clone(), kcc.clone(), kcq.clone(), m)
    } else {
        let mut kff = gram_matrix(&pts, sp, tp)?;
        for i in 0..n {
            kff[(i, i)] += noise_variance;
        }
        let kfc = data_constraint_gram(&pts, &sites, sp, tp)?;
        let (chol_ff, _) = cholesky_with_jitter(&kff, &JitterPolicy::default())?;
        let alpha = chol_ff.solve(&y);
        let mu_c = kfc.transpose() * &alpha;
        let mut v = kfc.clone();
        chol_ff.l().solve_lower_triangular_mut(&mut v);
        let sigma_c = &kcc - v.transpose() * &v;

        let b_len = n + m;
        let mut kbb = DMatrix::zeros(b_len, b_len);
        kbb.view_mut((0, 0), (n, n)).copy_from(&kff);
        kbb.view_mut((0, n), (n, m)).copy_from(&kfc);
        kbb.view_mut((n, 0), (m, n)).copy_from(&kfc.transpose());
        kbb.view_mut((n, n), (m, m)).copy_from(&kcc);

        let kfq = cross_gram(&pts, queries, sp, tp)?;
        let mut kbq = DMatrix::zeros(b_len, q);
        kbq.view_mut((0, 0), (n, q)).copy_from(&kfq);
        kbq.view_mut((n, 0), (m, q)).copy_from(&kcq);
        (mu_c, sigma_c, kbb, kbq, b_len)
    };

    // sample the truncated derivative posterior
    let lower = DVector::from_element(m, vops.lower_bound);
    let sym_sigma_c = symmetrize(&sigma_c);
    let (c_samples, diagnostics) =
        sample_truncated_mvn_auto(&mu_c, &sym_sigma_c, &lower, n_samples, tmvn_opts, rng_seed)?;

    // conditional of query values given (data, derivative sample)
    let (chol_bb, _) = cholesky_with_jitter(&kbb, &JitterPolicy::default())?;
    let w = chol_bb.solve(&kbq); // K_BB^{-1} K_Bq
    let mut v = kbq.clone();
    chol_bb.l().solve_lower_triangular_mut(&mut v);
    let sigma_q = &kqq - v.transpose() * &v;
    let lq = covariance_sqrt(&symmetrize(&sigma_q))?;

    let mut samples = DMatrix::zeros(n_samples, q);
    let mut b = DVector::zeros(b_len);
    for i in 0..n {
        b[i] = y[i];
    }
    for s in 0..n_samples {
        for j in 0..m {
            b[b_len - m + j] = c_samples[(s, j)];
        }
        let mean_s = w.transpose() * &b;
        let xi = DVector::from_iterator(q, (0..q).map(|_| T::of(standard_normal_f64(&mut rng))));
        let draw = mean_s + &lq * xi;
        samples.row_mut(s).copy_from(&draw.transpose());
    }

    // empirical moments (population convention)
    let ns = T::of(n_samples as f64);
    let mut mean_estimate = DVector::zeros(q);
    let mut std_estimate = DVector::zeros(q);
    for j in 0..q {
        let mut s1 = T::zero();
        for i in 0..n_samples {
            s1 += samples[(i, j)];
        }
        let mu = s1 / ns;
        let mut s2 = T::zero();
        for i in 0..n_samples {
            let d = samples[(i, j)] - mu;
            s2 += d * d;
        }
        mean_estimate[j] = mu;
        std_estimate[j] = (s2 / ns).sqrt();
    }

    Ok(ConstrainedPosteriorSamples { samples, mean_estimate, std_estimate, diagnostics })
}

fn symmetrize<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::of(0.5)
}

/// Square root of a PSD matrix: Cholesky with jitter, falling back to an
/// eigendecomposition with negative eigenvalues clipped at zero.
fn covariance_sqrt<T: Scalar>(cov: &DMatrix<T>) -> Result<DMatrix<T>> {
    match cholesky_with_jitter(cov, &JitterPolicy::default()) {
        Ok((chol, _)) => Ok(chol.l()),
        Err(_) => {
            let eig = nalgebra::SymmetricEigen::new(symmetrize(cov));
            let n = cov.nrows();
            let mut l = eig.eigenvectors.clone();
            for j in 0..n {
                let s = eig.eigenvalues[j].max(T::zero()).sqrt();
                for i in 0..n {
                    l[(i, j)] *= s;
                }
            }
            Ok(l)
        }
    }
}
