//! Truncated multivariate normal sampling.
//!
//! Two samplers are provided: an exponentially tilted accept-reject sampler
//! (minimax tilting) for moderate dimensions and well-conditioned covariances,
//! and a coordinatewise Gibbs sampler used as fallback when the tilting
//! sampler signals trouble, the dimension is large, or the covariance is close
//! to singular.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::special::{infinity, is_finite, ln_normal_prob, trandn};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Tilting,
    Gibbs,
    /// Analytic path (no truncation active, e.g. zero constraints).
    None,
}

#[derive(Debug, Clone)]
pub struct TmvnDiagnostics {
    pub kind: SamplerKind,
    pub acceptance_rate: f64,
    pub condition_estimate: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TmvnOptions {
    /// Above this truncation dimension the Gibbs sampler is dispatched.
    pub max_tilting_dim: usize,
    /// Covariance condition number above which Gibbs is dispatched.
    pub max_condition: f64,
    pub gibbs_burn_in: usize,
}

impl Default for TmvnOptions {
    fn default() -> Self {
        Self { max_tilting_dim: 60, max_condition: 1e10, gibbs_burn_in: 200 }
    }
}

/// i.i.d. draws from N(mean, cov) truncated to `{x : x >= lower}` via minimax
/// tilting. Rows of the output are samples. Deterministic given `rng_seed`.
///
/// Returns `FallbackNeeded` when the factorization pivots collapse, the
/// saddle-point solve fails, or the acceptance probability underflows; the
/// caller should switch to [`gibbs_truncated_mvn`].
pub fn sample_truncated_mvn<T: Scalar>(
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    lower: &DVector<T>,
    n: usize,
    rng_seed: u64,
) -> Result<DMatrix<T>> {
    let (samples, _acc) = tilting_sample(mean, cov, lower, n, rng_seed)?;
    Ok(samples)
}

fn tilting_sample<T: Scalar>(
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    lower: &DVector<T>,
    n: usize,
    rng_seed: u64,
) -> Result<(DMatrix<T>, f64)> {
    let d = mean.len();
    if d == 0 || n == 0 {
        return Err(CoreError::InvalidArgument("empty sampling request".into()));
    }
    if cov.nrows() != d || cov.ncols() != d || lower.len() != d {
        return Err(CoreError::DimensionMismatch("tmvn inputs inconsistent".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let l_shift: DVector<T> = lower - mean;

    if d == 1 {
        // univariate: direct truncated draw, no tilting needed
        let sd = cov[(0, 0)].max(T::zero()).sqrt();
        if sd <= T::zero() {
            return Err(CoreError::FallbackNeeded("zero variance in 1D".into()));
        }
        let a = l_shift[0] / sd;
        let mut out = DMatrix::zeros(n, 1);
        for i in 0..n {
            out[(i, 0)] = mean[0] + sd * trandn(a, infinity(), &mut rng);
        }
        return Ok((out, 1.0));
    }

    let upper: DVector<T> = DVector::from_element(d, infinity());
    let (l_full, ls, us, perm) = chol_perm(cov, &l_shift, &upper)?;

    // scale rows to unit diagonal; l_scaled has zero diagonal
    let mut diag = DVector::zeros(d);
    for i in 0..d {
        diag[i] = l_full[(i, i)];
        if diag[i] <= T::of(1e-300) {
            return Err(CoreError::FallbackNeeded("collapsed Cholesky pivot".into()));
        }
    }
    let mut lsc = ls.clone();
    let mut usc = us.clone();
    let mut l_scaled = l_full.clone();
    for i in 0..d {
        lsc[i] /= diag[i];
        if is_finite(usc[i]) {
            usc[i] /= diag[i];
        }
        for j in 0..d {
            l_scaled[(i, j)] /= diag[i];
        }
        l_scaled[(i, i)] = T::zero();
    }

    // saddle point for the tilting parameters
    let y = newton_solve(&l_scaled, &lsc, &usc)?;
    let mut x_star = DVector::zeros(d);
    let mut mu = DVector::zeros(d);
    for i in 0..d - 1 {
        x_star[i] = y[i];
        mu[i] = y[d - 1 + i];
    }
    let psi_star = psy(&x_star, &mu, &l_scaled, &lsc, &usc);

    // accept-reject with exponentially tilted sequential proposals
    let mut out = DMatrix::zeros(n, d);
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let cap = 200 * n + 10_000;
    let mut eta = DVector::zeros(d);
    while accepted < n {
        if proposed >= cap {
            return Err(CoreError::FallbackNeeded(format!(
                "acceptance probability underflow ({} accepted of {} proposals)",
                accepted, proposed
            )));
        }
        proposed += 1;
        let mut log_pr = T::zero();
        let mut ok = true;
        for k in 0..d {
            let mut c = T::zero();
            for j in 0..k {
                c += l_scaled[(k, j)] * eta[j];
            }
            let lt = lsc[k] - mu[k] - c;
            let ut = if is_finite(usc[k]) { usc[k] - mu[k] - c } else { infinity() };
            if lt.as_f64() > ut.as_f64() {
                ok = false;
                break;
            }
            let z = trandn(lt, ut, &mut rng);
            eta[k] = mu[k] + z;
            log_pr += ln_normal_prob(lt, ut) + T::of(0.5) * mu[k] * mu[k] - mu[k] * eta[k];
        }
        if !ok {
            continue;
        }
        let u: f64 = rand::Rng::random(&mut rng);
        if T::of(-u.ln()) > psi_star - log_pr {
            // map back: x = L_full eta (permuted), then unpermute and shift
            for i in 0..d {
                let mut v = T::zero();
                for j in 0..=i {
                    v += l_full[(i, j)] * eta[j];
                }
                out[(accepted, perm[i])] = v + mean[perm[i]];
            }
            accepted += 1;
        }
    }
    Ok((out, accepted as f64 / proposed.max(1) as f64))
}

/// Cholesky factorization with greedy variable reordering: at each step pick
/// the remaining variable with the smallest conditional truncation
/// probability. Returns the factor and the permuted bounds.
#[allow(clippy::type_complexity)]
fn chol_perm<T: Scalar>(
    cov: &DMatrix<T>,
    lower: &DVector<T>,
    upper: &DVector<T>,
) -> Result<(DMatrix<T>, DVector<T>, DVector<T>, Vec<usize>)> {
    let d = lower.len();
    let mut sigma = cov.clone();
    let mut l = DMatrix::<T>::zeros(d, d);
    let mut lo = lower.clone();
    let mut up = upper.clone();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut z = DVector::<T>::zeros(d);

    for j in 0..d {
        // choose the most constrained remaining variable
        let mut best = j;
        let mut best_pr = infinity::<T>();
        for i in j..d {
            let mut s2 = sigma[(i, i)];
            for k in 0..j {
                s2 -= l[(i, k)] * l[(i, k)];
            }
            let s = s2.max(T::of(1e-300)).sqrt();
            let mut c = T::zero();
            for k in 0..j {
                c += l[(i, k)] * z[k];
            }
            let tl = (lo[i] - c) / s;
            let tu = if is_finite(up[i]) { (up[i] - c) / s } else { infinity() };
            let pr = ln_normal_prob(tl, tu);
            if pr < best_pr {
                best_pr = pr;
                best = i;
            }
        }
        if best != j {
            sigma.swap_rows(j, best);
            sigma.swap_columns(j, best);
            l.swap_rows(j, best);
            lo.swap_rows(j, best);
            up.swap_rows(j, best);
            perm.swap(j, best);
        }

        let mut s2 = sigma[(j, j)];
        for k in 0..j {
            s2 -= l[(j, k)] * l[(j, k)];
        }
        if s2.as_f64() < -1e-8 * sigma[(j, j)].as_f64().abs().max(1.0) {
            return Err(CoreError::FallbackNeeded("covariance not PSD in cholperm".into()));
        }
        let s = s2.max(T::of(1e-14)).sqrt();
        l[(j, j)] = s;
        for i in j + 1..d {
            let mut v = sigma[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / s;
        }

        // conditional expectation of the truncated coordinate, used for the
        // remaining ordering decisions
        let mut c = T::zero();
        for k in 0..j {
            c += l[(j, k)] * z[k];
        }
        let tl = (lo[j] - c) / s;
        let tu = if is_finite(up[j]) { (up[j] - c) / s } else { infinity() };
        let w = ln_normal_prob(tl, tu);
        let el = if is_finite(tl) { (-T::of(0.5) * tl * tl - w).exp() } else { T::zero() };
        let eu = if is_finite(tu) { (-T::of(0.5) * tu * tu - w).exp() } else { T::zero() };
        z[j] = (el - eu) / T::of((2.0 * std::f64::consts::PI).sqrt());
    }
    Ok((l, lo, up, perm))
}

/// psi(x, mu): log of the tilted acceptance bound.
fn psy<T: Scalar>(
    x: &DVector<T>,
    mu: &DVector<T>,
    l_scaled: &DMatrix<T>,
    ls: &DVector<T>,
    us: &DVector<T>,
) -> T {
    let d = ls.len();
    let c = l_scaled * x;
    let mut total = T::zero();
    for k in 0..d {
        let lt = ls[k] - mu[k] - c[k];
        let ut = if is_finite(us[k]) { us[k] - mu[k] - c[k] } else { infinity() };
        total += ln_normal_prob(lt, ut) + T::of(0.5) * mu[k] * mu[k] - x[k] * mu[k];
    }
    total
}

/// Gradient and Jacobian of psi in the free variables
/// `y = [x_1..x_{d-1}, mu_1..mu_{d-1}]`, following the saddle-point system of
/// the tilting construction.
fn grad_psi<T: Scalar>(
    y: &DVector<T>,
    l_scaled: &DMatrix<T>,
    ls: &DVector<T>,
    us: &DVector<T>,
) -> (DVector<T>, DMatrix<T>) {
    let d = ls.len();
    let mut x = DVector::zeros(d);
    let mut mu = DVector::zeros(d);
    for i in 0..d - 1 {
        x[i] = y[i];
        mu[i] = y[d - 1 + i];
    }
    let c = l_scaled * &x;
    let sqrt2pi = T::of((2.0 * std::f64::consts::PI).sqrt());
    let mut pl = DVector::zeros(d);
    let mut pu = DVector::zeros(d);
    let mut lt0 = DVector::zeros(d);
    let mut ut0 = DVector::zeros(d);
    for k in 0..d {
        let lt = ls[k] - mu[k] - c[k];
        let ut = if is_finite(us[k]) { us[k] - mu[k] - c[k] } else { infinity() };
        let w = ln_normal_prob(lt, ut);
        if is_finite(lt) {
            pl[k] = (-T::of(0.5) * lt * lt - w).exp() / sqrt2pi;
            lt0[k] = lt;
        }
        if is_finite(ut) {
            pu[k] = (-T::of(0.5) * ut * ut - w).exp() / sqrt2pi;
            ut0[k] = ut;
        }
    }
    let p: DVector<T> = &pl - &pu;

    let mut grad = DVector::zeros(2 * (d - 1));
    // d psi / d x_j = sum_k P_k L_kj - mu_j
    for j in 0..d - 1 {
        let mut s = T::zero();
        for k in 0..d {
            s += p[k] * l_scaled[(k, j)];
        }
        grad[j] = s - mu[j];
    }
    // d psi / d mu_k = mu_k - x_k + P_k
    for k in 0..d - 1 {
        grad[d - 1 + k] = mu[k] - x[k] + p[k];
    }

    let mut dp = DVector::zeros(d);
    for k in 0..d {
        dp[k] = -p[k] * p[k] + lt0[k] * pl[k] - ut0[k] * pu[k];
    }
    // DL = diag(dp) * L ; mx = -I + DL ; xx = L^T DL
    let mut dl = l_scaled.clone();
    for k in 0..d {
        for j in 0..d {
            dl[(k, j)] *= dp[k];
        }
    }
    let mut mx = dl.clone();
    for k in 0..d {
        mx[(k, k)] -= T::one();
    }
    let xx = l_scaled.transpose() * &dl;

    let m = d - 1;
    let mut jac = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            jac[(i, j)] = xx[(i, j)];
            jac[(i, m + j)] = mx[(j, i)];
            jac[(m + i, j)] = mx[(i, j)];
        }
        jac[(m + i, m + i)] += T::one() + dp[i];
    }
    (grad, jac)
}

fn newton_solve<T: Scalar>(
    l_scaled: &DMatrix<T>,
    ls: &DVector<T>,
    us: &DVector<T>,
) -> Result<DVector<T>> {
    let d = ls.len();
    let mut y = DVector::<T>::zeros(2 * (d - 1));
    for iter in 0..120 {
        let (grad, jac) = grad_psi(&y, l_scaled, ls, us);
        let gnorm = grad.norm().as_f64();
        if !gnorm.is_finite() {
            return Err(CoreError::FallbackNeeded("non-finite saddle-point gradient".into()));
        }
        if gnorm < 1e-9 {
            return Ok(y);
        }
        let lu = jac.lu();
        let Some(step) = lu.solve(&grad) else {
            return Err(CoreError::FallbackNeeded("singular saddle-point Jacobian".into()));
        };
        // damp long steps to keep the iteration stable
        let snorm = step.norm().as_f64();
        let scale = if snorm > 10.0 { T::of(10.0 / snorm) } else { T::one() };
        y -= step * scale;
        if iter == 119 && gnorm > 1e-5 {
            return Err(CoreError::FallbackNeeded(format!(
                "saddle-point Newton stalled at |grad| = {gnorm:.2e}"
            )));
        }
    }
    Ok(y)
}

/// Gibbs sampler for the same target. Produces `n` correlated draws after
/// `burn_in` full sweeps of truncated-univariate-normal coordinate updates.
pub fn gibbs_truncated_mvn<T: Scalar>(
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    lower: &DVector<T>,
    n: usize,
    burn_in: usize,
    rng_seed: u64,
) -> Result<DMatrix<T>> {
    let d = mean.len();
    if cov.nrows() != d || lower.len() != d {
        return Err(CoreError::DimensionMismatch("tmvn inputs inconsistent".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);

    // precision matrix via jittered Cholesky
    let mut rel = 1e-12f64;
    let precision = loop {
        let mut kj = cov.clone();
        let scale = kj.trace().max(T::of(1e-12)) / T::of(d as f64);
        for i in 0..d {
            kj[(i, i)] += T::of(rel) * scale;
        }
        if let Some(chol) = nalgebra::Cholesky::new(kj) {
            break chol.inverse();
        }
        rel *= 100.0;
        if rel > 1e-2 {
            return Err(CoreError::Numerical("Gibbs: covariance not factorizable".into()));
        }
    };

    // start inside the truncation region
    let mut x = DVector::zeros(d);
    for i in 0..d {
        let sd = cov[(i, i)].max(T::zero()).sqrt();
        x[i] = mean[i].max(lower[i] + T::of(0.1) * sd.max(T::of(1e-6)));
    }

    let mut out = DMatrix::zeros(n, d);
    let sweeps = burn_in + n;
    for sweep in 0..sweeps {
        for k in 0..d {
            let qkk = precision[(k, k)];
            if !is_finite(qkk) || qkk <= T::zero() {
                // singular conditional: hold at the clipped conditional mean
                x[k] = x[k].max(lower[k]);
                continue;
            }
            let mut dot = T::zero();
            for j in 0..d {
                if j != k {
                    dot += precision[(k, j)] * (x[j] - mean[j]);
                }
            }
            let cond_mean = mean[k] - dot / qkk;
            let cond_sd = (T::one() / qkk).sqrt();
            if cond_sd <= T::zero() || !is_finite(cond_sd) {
                x[k] = cond_mean.max(lower[k]);
                continue;
            }
            let a = (lower[k] - cond_mean) / cond_sd;
            x[k] = cond_mean + cond_sd * trandn(a, infinity(), &mut rng);
        }
        if sweep >= burn_in {
            out.row_mut(sweep - burn_in).copy_from(&x.transpose());
        }
    }
    Ok(out)
}

/// Condition-number estimate of a symmetric PSD matrix.
pub fn condition_estimate<T: Scalar>(cov: &DMatrix<T>) -> f64 {
    let eig = cov.clone().symmetric_eigenvalues();
    let max = eig.iter().map(|e| e.as_f64()).fold(f64::MIN, f64::max);
    let min = eig.iter().map(|e| e.as_f64()).fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Dispatching front end: tilting below the dimension/conditioning thresholds,
/// Gibbs otherwise or on fallback signal. The choice is reported in the
/// diagnostics.
pub fn sample_truncated_mvn_auto<T: Scalar>(
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    lower: &DVector<T>,
    n: usize,
    opts: &TmvnOptions,
    rng_seed: u64,
) -> Result<(DMatrix<T>, TmvnDiagnostics)> {
    let d = mean.len();
    let cond = condition_estimate(cov);
    if d <= opts.max_tilting_dim && cond <= opts.max_condition {
        match tilting_sample(mean, cov, lower, n, rng_seed) {
            Ok((samples, acc)) => {
                return Ok((
                    samples,
                    TmvnDiagnostics {
                        kind: SamplerKind::Tilting,
                        acceptance_rate: acc,
                        condition_estimate: cond,
                        dim: d,
                    },
                ));
            }
            Err(CoreError::FallbackNeeded(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let samples = gibbs_truncated_mvn(mean, cov, lower, n, opts.gibbs_burn_in, rng_seed)?;
    Ok((
        samples,
        TmvnDiagnostics {
            kind: SamplerKind::Gibbs,
            acceptance_rate: 1.0,
            condition_estimate: cond,
            dim: d,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_normal_mean() -> f64 {
        (2.0 / std::f64::consts::PI).sqrt()
    }

    #[test]
    fn tilting_1d_half_normal() {
        let mean = DVector::from_vec(vec![0.0f64]);
        let cov = DMatrix::from_vec(1, 1, vec![1.0]);
        let lower = DVector::from_vec(vec![0.0]);
        let s = sample_truncated_mvn(&mean, &cov, &lower, 100_000, 1).unwrap();
        let m = s.column(0).sum() / 100_000.0;
        assert!((m - half_normal_mean()).abs() < 0.01, "mean {m}");
        assert!(s.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn gibbs_1d_half_normal() {
        let mean = DVector::from_vec(vec![0.0f64]);
        let cov = DMatrix::from_vec(1, 1, vec![1.0]);
        let lower = DVector::from_vec(vec![0.0]);
        let s = gibbs_truncated_mvn(&mean, &cov, &lower, 50_000, 500, 2).unwrap();
        let m = s.column(0).sum() / 50_000.0;
        assert!((m - half_normal_mean()).abs() < 0.02, "mean {m}");
    }

    #[test]
    fn no_truncation_matches_untruncated_moments() {
        let mean = DVector::from_vec(vec![1.0f64, -2.0]);
        let cov = DMatrix::from_vec(2, 2, vec![2.0, 0.6, 0.6, 1.0]);
        let lower = DVector::from_vec(vec![f64::NEG_INFINITY, f64::NEG_INFINITY]);
        let n = 60_000;
        let s = sample_truncated_mvn(&mean, &cov, &lower, n, 3).unwrap();
        let m0 = s.column(0).sum() / n as f64;
        let m1 = s.column(1).sum() / n as f64;
        // 3 standard errors
        assert!((m0 - 1.0).abs() < 3.0 * (2.0f64 / n as f64).sqrt());
        assert!((m1 + 2.0).abs() < 3.0 * (1.0f64 / n as f64).sqrt());
        let mut c01 = 0.0;
        for i in 0..n {
            c01 += (s[(i, 0)] - m0) * (s[(i, 1)] - m1);
        }
        c01 /= n as f64;
        assert!((c01 - 0.6).abs() < 0.05);
    }

    // independent oracle: naive rejection sampling from the untruncated normal
    fn rejection_oracle(
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        lower: &DVector<f64>,
        proposals: usize,
        seed: u64,
    ) -> Vec<DVector<f64>> {
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let chol = nalgebra::Cholesky::new(cov.clone()).unwrap();
        let d = mean.len();
        let mut kept = Vec::new();
        for _ in 0..proposals {
            let z = DVector::from_iterator(
                d,
                (0..d).map(|_| crate::special::standard_normal_f64(&mut rng)),
            );
            let x = mean + chol.l() * z;
            if (0..d).all(|i| x[i] >= lower[i]) {
                kept.push(x);
            }
        }
        kept
    }

    #[test]
    fn tilting_2d_matches_rejection_oracle() {
        let mean = DVector::from_vec(vec![0.0f64, 0.0]);
        let cov = DMatrix::<f64>::identity(2, 2);
        let lower = DVector::from_vec(vec![0.0, 0.0]);
        let n = 100_000;
        let s = sample_truncated_mvn(&mean, &cov, &lower, n, 4).unwrap();
        let oracle = rejection_oracle(&mean, &cov, &lower, 1_000_000, 5);
        let om: f64 = oracle.iter().map(|x| x[0]).sum::<f64>() / oracle.len() as f64;
        let m = s.column(0).sum() / n as f64;
        assert!((m - om).abs() < 0.01, "tilting {m} vs oracle {om}");
        assert!((m - half_normal_mean()).abs() < 0.01);
    }

    #[test]
    fn gibbs_correlated_2d_matches_rejection_oracle() {
        let mean = DVector::from_vec(vec![0.3f64, -0.2]);
        let cov = DMatrix::from_vec(2, 2, vec![1.0, 0.7, 0.7, 1.5]);
        let lower = DVector::from_vec(vec![0.0, 0.0]);
        let s = gibbs_truncated_mvn(&mean, &cov, &lower, 60_000, 500, 6).unwrap();
        let oracle = rejection_oracle(&mean, &cov, &lower, 1_000_000, 7);
        for k in 0..2 {
            let m = s.column(k).sum() / s.nrows() as f64;
            let om: f64 =
                oracle.iter().map(|x| x[k]).sum::<f64>() / oracle.len() as f64;
            assert!((m - om).abs() < 0.03, "coord {k}: gibbs {m} vs oracle {om}");
        }
    }

    #[test]
    fn gibbs_zero_correlation_matches_independent_marginals() {
        let mean = DVector::from_vec(vec![0.0f64, 1.0]);
        let cov = DMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 4.0]);
        let lower = DVector::from_vec(vec![0.0, 0.0]);
        let s = gibbs_truncated_mvn(&mean, &cov, &lower, 60_000, 500, 8).unwrap();
        // coord 0: half normal; coord 1: N(1, 4) truncated at 0
        let m0 = s.column(0).sum() / s.nrows() as f64;
        assert!((m0 - half_normal_mean()).abs() < 0.02);
        // analytic mean of truncated normal: mu + sd * phi(a)/Phi(-a), a = (0-1)/2
        let a = -0.5f64;
        let phi = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let tail = 0.5 * crate::special::erfc(a / std::f64::consts::SQRT_2);
        let expect = 1.0 + 2.0 * phi / tail;
        let m1 = s.column(1).sum() / s.nrows() as f64;
        assert!((m1 - expect).abs() < 0.03, "{m1} vs {expect}");
    }

    #[test]
    fn deterministic_given_seed() {
        let mean = DVector::from_vec(vec![0.0f64, 0.0, 0.0]);
        let mut cov = DMatrix::<f64>::identity(3, 3);
        cov[(0, 1)] = 0.3;
        cov[(1, 0)] = 0.3;
        let lower = DVector::from_vec(vec![0.0, -1.0, 0.5]);
        let a = sample_truncated_mvn(&mean, &cov, &lower, 200, 42).unwrap();
        let b = sample_truncated_mvn(&mean, &cov, &lower, 200, 42).unwrap();
        assert_eq!(a, b);
        let g1 = gibbs_truncated_mvn(&mean, &cov, &lower, 100, 50, 42).unwrap();
        let g2 = gibbs_truncated_mvn(&mean, &cov, &lower, 100, 50, 42).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn every_draw_respects_bounds() {
        let mean = DVector::from_vec(vec![-1.0f64, 2.0, 0.0, 0.5]);
        let mut cov = DMatrix::<f64>::identity(4, 4) * 2.0;
        cov[(0, 2)] = 0.5;
        cov[(2, 0)] = 0.5;
        let lower = DVector::from_vec(vec![0.0, 1.5, -0.5, 0.0]);
        let s = sample_truncated_mvn(&mean, &cov, &lower, 2_000, 9).unwrap();
        for i in 0..s.nrows() {
            for j in 0..4 {
                assert!(s[(i, j)] >= lower[j] - 1e-9);
            }
        }
    }

    #[test]
    fn dispatch_switches_to_gibbs_on_high_dimension() {
        let d = 70; // above the default tilting threshold
        let mean = DVector::<f64>::zeros(d);
        let cov = DMatrix::<f64>::identity(d, d);
        let lower = DVector::from_element(d, -0.5);
        let (s, diag) =
            sample_truncated_mvn_auto(&mean, &cov, &lower, 50, &TmvnOptions::default(), 10)
                .unwrap();
        assert_eq!(diag.kind, SamplerKind::Gibbs);
        assert_eq!(s.nrows(), 50);
    }
}
