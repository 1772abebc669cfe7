//! Closed-loop episode simulation and instability detection.

use crate::{LqrError, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use tvbo_core::special::standard_normal_f64;

/// Episode settings: horizon, sampling time, cost weights, initial state, and
/// process-noise magnitude.
#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    /// Simulation steps per episode.
    pub m: usize,
    /// Sampling time [s].
    pub dt: f64,
    /// State weight matrix.
    pub q: DMatrix<f64>,
    /// Input weight.
    pub r: f64,
    pub x0: DVector<f64>,
    /// Per-state process-noise standard deviation.
    pub process_noise_std: DVector<f64>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            m: 1000,
            dt: 0.02,
            q: DMatrix::identity(4, 4) * 10.0,
            r: 1.0,
            x0: DVector::zeros(4),
            process_noise_std: DVector::from_element(4, 1e-3),
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.dt <= 0.0 || self.r <= 0.0 {
            return Err(LqrError::Config("need M >= 1, dt > 0, R > 0".into()));
        }
        if self.q.nrows() != self.q.ncols()
            || self.q.nrows() != self.x0.len()
            || self.x0.len() != self.process_noise_std.len()
        {
            return Err(LqrError::Config("episode dimensions inconsistent".into()));
        }
        Ok(())
    }

    /// Copy with zero noise (and optionally a different initial state) for
    /// noise-free objective evaluations.
    pub fn noise_free(&self, x0: Option<DVector<f64>>) -> Self {
        Self {
            process_noise_std: DVector::zeros(self.x0.len()),
            x0: x0.unwrap_or_else(|| self.x0.clone()),
            ..self.clone()
        }
    }
}

/// Simulation outcome. `cost` is `+inf` when the state diverged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    /// Averaged accumulated quadratic cost.
    pub cost: f64,
    pub stable: bool,
    pub max_state_norm: f64,
}

/// Instability heuristics. `cost_threshold` is typically calibrated to 100x
/// the median cost of the initial dataset and is absent until that exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub cost_threshold: Option<f64>,
    pub norm_bound: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { cost_threshold: None, norm_bound: 1e3 }
    }
}

/// Unstable iff the raw cost exceeds the threshold, the state norm exceeded
/// the divergence bound, or non-finite values occurred.
pub fn is_unstable(cost: f64, max_state_norm: f64, thr: &ThresholdConfig) -> bool {
    if !cost.is_finite() || !max_state_norm.is_finite() {
        return true;
    }
    if max_state_norm > thr.norm_bound {
        return true;
    }
    matches!(thr.cost_threshold, Some(c) if cost > c)
}

/// Simulate `x_{m+1} = Ad x_m + Bd u_m + w_m` with `u_m = -K' x_m` and i.i.d.
/// Gaussian process noise, and average the quadratic cost. Deterministic
/// given `rng_seed`. The plant `(ad, bd)` is frozen for the whole episode.
pub fn simulate_episode(
    k: &DVector<f64>,
    ad: &DMatrix<f64>,
    bd: &DVector<f64>,
    cfg: &EpisodeConfig,
    thr: &ThresholdConfig,
    rng_seed: u64,
) -> Result<EpisodeResult> {
    cfg.validate()?;
    if k.len() != cfg.x0.len() {
        return Err(LqrError::Config("gain dimension mismatch".into()));
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Ok(EpisodeResult { cost: f64::INFINITY, stable: false, max_state_norm: f64::INFINITY });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let n = cfg.x0.len();
    let noisy = cfg.process_noise_std.iter().any(|&s| s > 0.0);
    let mut x = cfg.x0.clone();
    let mut acc = 0.0f64;
    let mut max_norm = x.norm();
    // divergence guard well above the instability bound so the detector sees
    // the excursion but the accumulator never overflows
    let divergence_cap = thr.norm_bound.max(1.0) * 1e3;
    for _ in 0..cfg.m {
        let u = -k.dot(&x);
        acc += (x.transpose() * &cfg.q * &x)[(0, 0)] + cfg.r * u * u;
        let mut next = ad * &x + bd * u;
        if noisy {
            for i in 0..n {
                next[i] += cfg.process_noise_std[i] * standard_normal_f64(&mut rng);
            }
        }
        x = next;
        let norm = x.norm();
        max_norm = max_norm.max(norm);
        if !norm.is_finite() || norm > divergence_cap {
            return Ok(EpisodeResult {
                cost: f64::INFINITY,
                stable: false,
                max_state_norm: if norm.is_finite() { max_norm } else { f64::INFINITY },
            });
        }
    }
    let cost = acc / cfg.m as f64;
    let stable = !is_unstable(cost, max_norm, thr);
    Ok(EpisodeResult { cost, stable, max_state_norm: max_norm })
}
