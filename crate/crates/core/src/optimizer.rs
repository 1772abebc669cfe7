//! The time-varying Bayesian optimization loop.
//!
//! One step: refit hyperparameters, build the trust region around the current
//! best estimate, minimize the lower confidence bound over candidates inside
//! the region (with or without convexity constraints), evaluate the objective
//! at the chosen point, and impute a pessimistic value when the evaluation is
//! unstable. All surrogate work happens on a normalized unit box with
//! normalized objective values; the normalization is frozen from the initial
//! data.

use crate::constrained::{constrained_posterior_samples, place_vops};
use crate::error::{CoreError, Result};
use crate::fit::{fit_hyperparameters, FitOptions};
use crate::gp::PosteriorEvaluator;
use crate::scalar::Scalar;
use crate::tmvn::{TmvnDiagnostics, TmvnOptions};
use crate::types::{
    Dataset, HyperPriors, Observation, ParamPoint, SpatialKernelParams, TemporalKernelParams,
};
use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

/// Axis-aligned box of feasible controller parameters (raw coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperbox<T: Scalar> {
    pub lower: DVector<T>,
    pub upper: DVector<T>,
}

impl<T: Scalar> Hyperbox<T> {
    pub fn new(lower: DVector<T>, upper: DVector<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "box bounds {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(upper.iter()).any(|(&l, &u)| u <= l) {
            return Err(CoreError::InvalidArgument(
                "box must have positive width in every dimension".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: DVector::from_element(dim, T::zero()),
            upper: DVector::from_element(dim, T::one()),
        }
    }

    /// Map raw coordinates to the unit box.
    pub fn to_unit(&self, raw: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.dim(),
            raw.iter()
                .enumerate()
                .map(|(i, &x)| (x - self.lower[i]) / (self.upper[i] - self.lower[i])),
        )
    }

    /// Map unit-box coordinates back to raw coordinates.
    pub fn from_unit(&self, unit: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.dim(),
            unit.iter()
                .enumerate()
                .map(|(i, &u)| self.lower[i] + u * (self.upper[i] - self.lower[i])),
        )
    }

    pub fn contains(&self, x: &DVector<T>) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }
}

/// Axis-aligned acquisition search region. Unlike [`Hyperbox`] it may be
/// degenerate (zero width) in some or all dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegion<T: Scalar> {
    pub lower: DVector<T>,
    pub upper: DVector<T>,
}

impl<T: Scalar> TrustRegion<T> {
    pub fn widths(&self) -> DVector<T> {
        &self.upper - &self.lower
    }

    pub fn is_degenerate(&self) -> bool {
        self.widths().iter().all(|&w| w <= T::zero())
    }
}

/// Centered box `best ± widths/2`, clipped to the feasible box. The feasible
/// box must be non-degenerate and contain `best`.
pub fn local_region<T: Scalar>(
    best: &DVector<T>,
    widths: &DVector<T>,
    feasible: &Hyperbox<T>,
) -> Result<TrustRegion<T>> {
    if best.len() != feasible.dim() || widths.len() != feasible.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "center/widths/feasible dims {}/{}/{}",
            best.len(),
            widths.len(),
            feasible.dim()
        )));
    }
    if widths.iter().any(|&w| w < T::zero()) {
        return Err(CoreError::InvalidArgument("widths must be non-negative".into()));
    }
    if !feasible.contains(best) {
        return Err(CoreError::InvalidArgument(
            "region center must lie inside the feasible box".into(),
        ));
    }
    let d = best.len();
    let half = T::of(0.5);
    let mut lower = DVector::zeros(d);
    let mut upper = DVector::zeros(d);
    for i in 0..d {
        lower[i] = (best[i] - half * widths[i]).max(feasible.lower[i]);
        upper[i] = (best[i] + half * widths[i]).min(feasible.upper[i]);
    }
    Ok(TrustRegion { lower, upper })
}

/// Lower confidence bound `mean - sqrt(beta) * std`.
pub fn lcb<T: Scalar>(mean: T, std: T, beta: T) -> T {
    mean - beta.sqrt() * std
}

/// Frozen affine normalization `y -> (y - mean)/std`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer<T: Scalar> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> Normalizer<T> {
    pub fn apply(&self, y: T) -> T {
        (y - self.mean) / self.std
    }

    pub fn invert(&self, z: T) -> T {
        self.mean + self.std * z
    }
}

/// Normalize values to zero mean and unit standard deviation (population
/// convention). All-identical inputs are degenerate.
pub fn normalize<T: Scalar>(raw: &[T]) -> Result<(Vec<T>, Normalizer<T>)> {
    if raw.is_empty() {
        return Err(CoreError::DegenerateData("nothing to normalize".into()));
    }
    let n = T::of(raw.len() as f64);
    let mut mean = T::zero();
    for &v in raw {
        mean += v;
    }
    mean /= n;
    let mut var = T::zero();
    for &v in raw {
        let d = v - mean;
        var += d * d;
    }
    var /= n;
    let std = var.sqrt();
    if std <= T::zero() {
        return Err(CoreError::DegenerateData(
            "normalization requires non-identical values".into(),
        ));
    }
    let nm = Normalizer { mean, std };
    Ok((raw.iter().map(|&v| nm.apply(v)).collect(), nm))
}

/// Forgetting strategy of the temporal kernel. For uncertainty injection the
/// working process variance is re-derived from the current output variance,
/// `sigma_w^2 = sigma_hat_w^2 / sigma_k^2`, after every refit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forgetting<T: Scalar> {
    Ui { sigma_hat_w_sq: T },
    B2p { epsilon: T },
    TimeInvariant,
}

impl<T: Scalar> Forgetting<T> {
    pub fn temporal_params(&self, output_variance: T) -> Result<TemporalKernelParams<T>> {
        match *self {
            Forgetting::Ui { sigma_hat_w_sq } => {
                TemporalKernelParams::ui(sigma_hat_w_sq / output_variance)
            }
            Forgetting::B2p { epsilon } => TemporalKernelParams::b2p(epsilon),
            Forgetting::TimeInvariant => Ok(TemporalKernelParams::TimeInvariant),
        }
    }
}

/// Knobs of one optimizer step.
#[derive(Debug, Clone)]
pub struct AcquisitionConfig<T: Scalar> {
    /// Confidence parameter of the lower confidence bound.
    pub beta: T,
    /// Enforce convexity constraints through virtual observation points.
    pub use_constraints: bool,
    /// Candidate grid resolution per dimension (unconstrained path).
    pub grid_per_dim: usize,
    /// Candidate cap; above it, Latin hypercube sampling replaces the grid.
    pub max_candidates: usize,
    /// Candidate grid resolution per dimension (constrained path).
    pub constrained_grid_per_dim: usize,
    pub constrained_max_candidates: usize,
    /// Posterior draws per constrained acquisition evaluation.
    pub n_posterior_samples: usize,
    /// VOP grid resolution per dimension.
    pub vop_per_dim: usize,
    /// Hard cap on the number of derivative constraints.
    pub vop_budget: usize,
    /// Trust-region width as a fraction of the unit box.
    pub trust_region_fraction: T,
    /// Pattern-search refinement iterations after the grid argmin
    /// (unconstrained path only).
    pub refine_iters: usize,
    /// Imputation pessimism: `y = mean + margin * std`.
    pub imputation_margin: T,
    pub fit: FitOptions<T>,
    pub tmvn: TmvnOptions,
    /// Optional sliding data window (off by default).
    pub window: Option<usize>,
}

impl<T: Scalar> AcquisitionConfig<T> {
    /// Defaults for a `dim`-dimensional problem. The VOP density drops from 5
    /// to 3 per dimension above 2 dimensions to keep the constraint count in
    /// budget.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            beta: T::of(2.0),
            use_constraints: false,
            grid_per_dim: 50,
            max_candidates: 4096,
            constrained_grid_per_dim: 13,
            constrained_max_candidates: 256,
            n_posterior_samples: 64,
            vop_per_dim: if dim <= 2 { 5 } else { 3 },
            vop_budget: 200,
            trust_region_fraction: T::of(0.15),
            refine_iters: 25,
            imputation_margin: T::of(3.0),
            fit: FitOptions::default(),
            tmvn: TmvnOptions::default(),
            window: None,
        }
    }
}

/// Everything the loop carries between steps. Parameters and objective values
/// inside `data` are normalized (unit box, frozen y-normalization).
#[derive(Debug, Clone)]
pub struct OptimizerState<T: Scalar> {
    pub data: Dataset<T>,
    pub t: u32,
    /// Current minimizer estimate in unit coordinates.
    pub best_estimate: DVector<T>,
    pub spatial: SpatialKernelParams<T>,
    pub noise_variance: T,
    pub forgetting: Forgetting<T>,
    pub normalizer: Normalizer<T>,
    pub feasible: Hyperbox<T>,
    pub priors: HyperPriors<T>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn temporal_params(&self) -> Result<TemporalKernelParams<T>> {
        self.forgetting.temporal_params(self.spatial.output_variance)
    }

    pub fn best_estimate_raw(&self) -> DVector<T> {
        self.feasible.from_unit(&self.best_estimate)
    }
}

/// What happened during one optimizer step.
#[derive(Debug, Clone)]
pub struct StepRecord<T: Scalar> {
    pub t: u32,
    /// Evaluated parameters, raw coordinates.
    pub theta_raw: DVector<T>,
    /// Observed raw objective value (meaningless when unstable).
    pub y_raw: T,
    /// Value stored in the dataset (normalized; imputed when unstable).
    pub y_norm: T,
    pub stable: bool,
    pub imputed: bool,
    /// Minimizer estimate after the step, raw coordinates.
    pub best_raw: DVector<T>,
    pub wall_ms: f64,
    pub sampler: Option<TmvnDiagnostics>,
}

/// Build the starting state from raw initial evaluations (`theta` raw, `y`
/// raw, stability flag), all stamped t = 0. The y-normalization computed here
/// stays frozen for the whole run. Unstable initial entries get the imputed
/// pessimistic value after the stable ones fix the normalization.
pub fn initialize<T: Scalar>(
    initial: &[(DVector<T>, T, bool)],
    feasible: &Hyperbox<T>,
    forgetting: Forgetting<T>,
    cfg: &AcquisitionConfig<T>,
) -> Result<OptimizerState<T>> {
    if initial.is_empty() {
        return Err(CoreError::DegenerateData("initial dataset is empty".into()));
    }
    let dim = feasible.dim();
    for (theta, _, _) in initial {
        if theta.len() != dim {
            return Err(CoreError::DimensionMismatch(format!(
                "initial point dim {} != {}",
                theta.len(),
                dim
            )));
        }
    }
    let stable_ys: Vec<T> = initial
        .iter()
        .filter(|(_, _, s)| *s)
        .map(|&(_, y, _)| y)
        .collect();
    if stable_ys.len() < 2 {
        return Err(CoreError::DegenerateData(
            "need at least 2 stable initial evaluations to normalize".into(),
        ));
    }
    let (_, normalizer) = normalize(&stable_ys)?;

    let spatial = SpatialKernelParams::isotropic(dim, T::of(0.3), T::one())?;
    let noise_variance = T::of(0.1);

    let mut data = Dataset::new();
    let mut best: Option<(T, DVector<T>)> = None;
    // stable records first so imputation has a posterior to lean on
    for (theta, y, stable) in initial.iter().filter(|(_, _, s)| *s) {
        let unit = feasible.to_unit(theta);
        let z = normalizer.apply(*y);
        if best.as_ref().is_none_or(|(b, _)| z < *b) {
            best = Some((z, unit.clone()));
        }
        data.push(Observation::new(ParamPoint::new(unit, 0), z, *stable, false)?)?;
    }
    let (_, best_unit) = best.expect("at least one stable record");

    let mut state = OptimizerState {
        data,
        t: 0,
        best_estimate: best_unit,
        spatial,
        noise_variance,
        forgetting,
        normalizer,
        feasible: feasible.clone(),
        priors: HyperPriors::default_normalized(dim),
    };
    for (theta, _, stable) in initial.iter().filter(|(_, _, s)| !*s) {
        let unit = state.feasible.to_unit(theta);
        let z = impute_unstable(&unit, 0, &state, cfg)?;
        let _ = stable;
        state
            .data
            .push(Observation::new(ParamPoint::new(unit, 0), z, false, true)?)?;
    }
    Ok(state)
}

/// Pessimistic imputation for an unstable evaluation at unit-box location
/// `theta_unit`, time `t`: posterior mean plus `imputation_margin` standard
/// deviations under the current surrogate.
pub fn impute_unstable<T: Scalar>(
    theta_unit: &DVector<T>,
    t: u32,
    state: &OptimizerState<T>,
    cfg: &AcquisitionConfig<T>,
) -> Result<T> {
    let tp = state.temporal_params()?;
    let ev = PosteriorEvaluator::new(&state.data, &state.spatial, &tp, state.noise_variance)?;
    let (mean, var) = ev.mean_var(&ParamPoint::new(theta_unit.clone(), t))?;
    Ok(mean + cfg.imputation_margin * var.sqrt())
}

/// Acquisition outcome.
#[derive(Debug, Clone)]
pub struct Selection<T: Scalar> {
    pub query: DVector<T>,
    pub sampler: Option<TmvnDiagnostics>,
}

/// Current minimizer estimate, evaluated at time `t`, built from the
/// locations of past stable queries scored by the pessimistic posterior
/// value mean + std. Kept separate from the (sample-based) acquisition so
/// that the trust region stays anchored to the data rather than to Monte
/// Carlo noise, and restricted to evaluated locations so that interpolation
/// artifacts away from the data cannot relocate the trust region.
///
/// The estimate is the centroid of the best-scoring quintile rather than
/// the single argmin: on flat objectives the argmin position inside the
/// near-optimal plateau is decided by noise and can sit at the plateau's
/// edge, whereas the centroid lands in the plateau's interior. The one-
/// sigma pessimism term weights the scores toward recently confirmed
/// points: under forgetting, stale observations carry inflated variance, so
/// the estimate follows the drifting optimum. Falls back to a global grid
/// argmin in the degenerate case of no stable records.
pub fn best_estimate<T: Scalar>(
    state: &OptimizerState<T>,
    cfg: &AcquisitionConfig<T>,
    t: u32,
) -> Result<DVector<T>> {
    let d = state.feasible.dim();
    let tp = state.temporal_params()?;
    let ev = PosteriorEvaluator::new(&state.data, &state.spatial, &tp, state.noise_variance)?;

    // Per-step movement limit on the estimate. The minimizer drifts
    // continuously, so a large jump reflects estimation noise rather than
    // real movement; rate-limiting forces the trust region to migrate
    // through freshly probed territory instead of teleporting onto stale
    // candidates whose true value may have degraded since they were probed.
    let max_step = cfg.trust_region_fraction / T::of(4.0);
    let clamp_to_previous = |mut x: DVector<T>| -> DVector<T> {
        for i in 0..d {
            let prev = state.best_estimate[i];
            x[i] = x[i].max(prev - max_step).min(prev + max_step);
        }
        x
    };

    let candidates: Vec<DVector<T>> = state
        .data
        .records()
        .iter()
        .filter(|o| o.stable)
        .map(|o| o.point.theta.clone())
        .collect();
    if candidates.is_empty() {
        // largest per-dimension resolution whose full grid fits the cap
        let mut per_dim = cfg.grid_per_dim.max(2);
        while per_dim > 2 && (per_dim as f64).powi(d as i32) > cfg.max_candidates as f64 {
            per_dim -= 1;
        }
        let unit = TrustRegion {
            lower: DVector::from_element(d, T::zero()),
            upper: DVector::from_element(d, T::one()),
        };
        let grid = grid_candidates(&unit, per_dim);
        let mut best = grid[0].clone();
        let mut best_mean = infinity_of::<T>();
        for c in &grid {
            let (m, _) = ev.mean_var(&ParamPoint::new(c.clone(), t))?;
            if m < best_mean {
                best_mean = m;
                best = c.clone();
            }
        }
        return Ok(clamp_to_previous(best));
    }

    // Score by mean plus a capped standard-deviation penalty. The penalty
    // keeps single noisy observations from steering the estimate, but it is
    // capped so that stale candidates (whose variance grows without bound
    // under forgetting) can still outrank a freshly probed cluster when
    // their posterior mean is genuinely better; an uncapped penalty pins
    // the estimate to whatever region was probed most recently.
    let sigma_cap = T::of(0.3);
    let mut scored: Vec<(T, usize)> = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        let (m, v) = ev.mean_var(&ParamPoint::new(c.clone(), t))?;
        scored.push((m + v.max(T::zero()).sqrt().min(sigma_cap), i));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    // rank-weighted centroid of the best-scoring quintile: linear weights
    // keep the estimate close to the top candidates on peaked objectives
    // while still averaging into the plateau interior on flat ones
    let keep = (scored.len().div_ceil(5)).max(1);
    let mut centroid = DVector::<T>::zeros(d);
    let mut total = T::zero();
    for (rank, &(_, i)) in scored.iter().take(keep).enumerate() {
        let w = T::of(((keep - rank) * (keep - rank)) as f64);
        centroid += &candidates[i] * w;
        total += w;
    }
    centroid /= total;
    Ok(clamp_to_previous(centroid))
}

fn infinity_of<T: Scalar>() -> T {
    crate::special::infinity()
}

fn grid_candidates<T: Scalar>(region: &TrustRegion<T>, per_dim: usize) -> Vec<DVector<T>> {
    let d = region.lower.len();
    let axes: Vec<Vec<T>> = (0..d)
        .map(|i| {
            if region.upper[i] <= region.lower[i] {
                vec![region.lower[i]]
            } else {
                (0..per_dim)
                    .map(|k| {
                        region.lower[i]
                            + (region.upper[i] - region.lower[i]) * T::of(k as f64)
                                / T::of((per_dim - 1) as f64)
                    })
                    .collect()
            }
        })
        .collect();
    let mut out = vec![DVector::<T>::zeros(d)];
    for (i, axis) in axes.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for c in &out {
            for &v in axis {
                let mut x = c.clone();
                x[i] = v;
                next.push(x);
            }
        }
        out = next;
    }
    out
}

/// Latin hypercube sample of `n` points inside `region`.
fn lhs_candidates<T: Scalar>(
    region: &TrustRegion<T>,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<DVector<T>> {
    let d = region.lower.len();
    let mut strata: Vec<Vec<usize>> = (0..d).map(|_| (0..n).collect()).collect();
    for s in strata.iter_mut() {
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            s.swap(i, j);
        }
    }
    (0..n)
        .map(|k| {
            DVector::from_iterator(
                d,
                (0..d).map(|i| {
                    let u = (strata[i][k] as f64 + rng.random::<f64>()) / n as f64;
                    region.lower[i] + (region.upper[i] - region.lower[i]) * T::of(u)
                }),
            )
        })
        .collect()
}

fn argmin<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        // strict comparison: ties resolve to the lowest index
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Choose the next query in `region` (unit coordinates) by minimizing the
/// lower confidence bound of the surrogate at time step `t_next`.
pub fn select_query<T: Scalar>(
    state: &OptimizerState<T>,
    cfg: &AcquisitionConfig<T>,
    region: &TrustRegion<T>,
    t_next: u32,
    rng: &mut ChaCha12Rng,
) -> Result<Selection<T>> {
    if region.is_degenerate() {
        return Ok(Selection { query: region.lower.clone(), sampler: None });
    }
    let tp = state.temporal_params()?;
    let d = region.lower.len();

    if cfg.use_constraints {
        let per_dim = cfg.constrained_grid_per_dim;
        let candidates = if per_dim.pow(d as u32) <= cfg.constrained_max_candidates {
            grid_candidates(region, per_dim)
        } else {
            lhs_candidates(region, cfg.constrained_max_candidates, rng)
        };
        let vops = place_vops(region, cfg.vop_per_dim, t_next, cfg.vop_budget)?;
        let queries: Vec<ParamPoint<T>> = candidates
            .iter()
            .map(|c| ParamPoint::new(c.clone(), t_next))
            .collect();
        let seed = rng.next_u64();
        let out = constrained_posterior_samples(
            &state.data,
            &vops,
            &queries,
            &state.spatial,
            &tp,
            state.noise_variance,
            cfg.n_posterior_samples,
            &cfg.tmvn,
            seed,
        )?;
        let scores: Vec<T> = (0..candidates.len())
            .map(|i| lcb(out.mean_estimate[i], out.std_estimate[i], cfg.beta))
            .collect();
        Ok(Selection {
            query: candidates[argmin(&scores)].clone(),
            sampler: Some(out.diagnostics),
        })
    } else {
        let per_dim = cfg.grid_per_dim;
        let candidates = if (per_dim as f64).powi(d as i32) <= cfg.max_candidates as f64 {
            grid_candidates(region, per_dim)
        } else {
            lhs_candidates(region, cfg.max_candidates, rng)
        };
        let ev = PosteriorEvaluator::new(&state.data, &state.spatial, &tp, state.noise_variance)?;
        let score_at = |x: &DVector<T>| -> Result<T> {
            let (m, v) = ev.mean_var(&ParamPoint::new(x.clone(), t_next))?;
            Ok(lcb(m, v.sqrt(), cfg.beta))
        };
        let mut scores = Vec::with_capacity(candidates.len());
        for c in &candidates {
            scores.push(score_at(c)?);
        }
        let mut query = candidates[argmin(&scores)].clone();
        let mut best_score = scores[argmin(&scores)];

        // local pattern-search refinement between grid nodes
        let widths = region.widths();
        let mut step: DVector<T> =
            widths.map(|w| w / T::of((per_dim.max(2) - 1) as f64));
        for _ in 0..cfg.refine_iters {
            let mut moved = false;
            for i in 0..d {
                if step[i] <= T::zero() {
                    continue;
                }
                for sgn in [T::one(), -T::one()] {
                    let mut cand = query.clone();
                    cand[i] = (cand[i] + sgn * step[i])
                        .max(region.lower[i])
                        .min(region.upper[i]);
                    let s = score_at(&cand)?;
                    if s < best_score {
                        best_score = s;
                        query = cand;
                        moved = true;
                    }
                }
            }
            if !moved {
                for i in 0..d {
                    step[i] *= T::of(0.5);
                }
            }
        }
        Ok(Selection { query, sampler: None })
    }
}

/// One loop iteration. `objective` receives raw parameters and the time step
/// being evaluated, returning the raw cost and a stability flag.
pub fn tvbo_step<T: Scalar>(
    state: &mut OptimizerState<T>,
    cfg: &AcquisitionConfig<T>,
    objective: &mut impl FnMut(&DVector<T>, u32) -> (T, bool),
    rng: &mut ChaCha12Rng,
) -> Result<StepRecord<T>> {
    let start = Instant::now();

    if state.data.len() >= 2 {
        let tp = state.temporal_params()?;
        let fit = fit_hyperparameters(
            &state.data,
            &state.spatial,
            &tp,
            &state.priors,
            state.noise_variance,
            &cfg.fit,
        )?;
        state.spatial = fit.spatial;
        state.noise_variance = fit.noise_variance;
        // the UI process variance is re-derived from the new output variance
        // the next time temporal_params() is called
    }

    let t_next = state.t + 1;
    let dim = state.feasible.dim();
    // re-anchor the minimizer estimate on the refitted surrogate before
    // building the trust region
    state.best_estimate = best_estimate(state, cfg, t_next)?;
    let region = if cfg.use_constraints {
        let widths = DVector::from_element(dim, cfg.trust_region_fraction);
        local_region(&state.best_estimate, &widths, &Hyperbox::unit(dim))?
    } else {
        TrustRegion {
            lower: DVector::from_element(dim, T::zero()),
            upper: DVector::from_element(dim, T::one()),
        }
    };

    let selection = select_query(state, cfg, &region, t_next, rng)?;
    let theta_raw = state.feasible.from_unit(&selection.query);
    let (y_raw, stable_flag) = objective(&theta_raw, t_next);
    let stable = stable_flag && crate::special::is_finite(y_raw);

    let y_norm = if stable {
        state.normalizer.apply(y_raw)
    } else {
        impute_unstable(&selection.query, t_next, state, cfg)?
    };
    state.data.push(Observation::new(
        ParamPoint::new(selection.query.clone(), t_next),
        y_norm,
        stable,
        !stable,
    )?)?;
    if let Some(w) = cfg.window {
        state.data.truncate_to_window(w);
    }

    state.t = t_next;

    Ok(StepRecord {
        t: t_next,
        theta_raw,
        y_raw,
        y_norm,
        stable,
        imputed: !stable,
        best_raw: state.best_estimate_raw(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        sampler: selection.sampler,
    })
}

/// Run the full loop for `horizon` steps from raw initial evaluations.
/// Deterministic given the seed.
pub fn run<T: Scalar>(
    initial: &[(DVector<T>, T, bool)],
    feasible: &Hyperbox<T>,
    forgetting: Forgetting<T>,
    cfg: &AcquisitionConfig<T>,
    objective: &mut impl FnMut(&DVector<T>, u32) -> (T, bool),
    horizon: u32,
    seed: u64,
) -> Result<(OptimizerState<T>, Vec<StepRecord<T>>)> {
    let mut state = initialize(initial, feasible, forgetting, cfg)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut trajectory = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        trajectory.push(tvbo_step(&mut state, cfg, objective, &mut rng)?);
    }
    Ok((state, trajectory))
}
