//! Experiment orchestration: method x seed sweeps, per-run trajectory CSVs,
//! regret curves, and summary statistics.

use crate::config::{ExperimentConfig, Method};
use crate::csvio::{fmt12, round12};
use nalgebra::DVector;
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use tvbo_core::optimizer::{AcquisitionConfig, Forgetting};
use tvbo_lqr::bench::{episode_seed, make_initial_dataset, LqrProblem, Preset};

/// One row of a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: u32,
    pub theta: Vec<f64>,
    pub y_raw: f64,
    pub stable: bool,
    pub imputed: bool,
    /// Noise-free regret increment (0 at unstable steps), rounded to the CSV
    /// precision so files and in-memory statistics agree exactly.
    pub regret_inc: f64,
    pub cum_regret: f64,
}

/// Completed run of one (method, seed) pair.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub method: Method,
    pub seed: u64,
    pub rows: Vec<TrajectoryRow>,
    pub total_regret: f64,
    pub unstable_count: usize,
}

/// Table-style summary per method.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub unstable_mean: f64,
    pub unstable_std: f64,
    pub runs: usize,
}

fn stream_seed(run_seed: u64, stream: u32) -> u64 {
    episode_seed(run_seed, stream)
}

/// Execute a single run. Pure given (config, method, seed).
pub fn execute_run(
    cfg: &ExperimentConfig,
    method: Method,
    seed: u64,
) -> Result<RunOutcome, String> {
    let preset = Preset::parse(&cfg.problem).map_err(|e| e.to_string())?;
    let mut problem = LqrProblem::new(preset).map_err(|e| e.to_string())?;
    let n_states = problem.episode.x0.len();
    problem.episode.process_noise_std = DVector::from_element(n_states, cfg.process_noise_std);
    problem.thresholds.norm_bound = cfg.norm_bound;
    if cfg.box_fraction > 0.0 {
        problem.set_box_fraction(cfg.box_fraction).map_err(|e| e.to_string())?;
    }

    let (mut initial, median) =
        make_initial_dataset(cfg.n_initial, &mut problem, stream_seed(seed, 1))
            .map_err(|e| e.to_string())?;
    let cost_threshold = cfg.cost_threshold_factor * median;
    problem.thresholds.cost_threshold = Some(cost_threshold);
    // apply the same stability criterion to the initial records that every
    // later observation is judged by; without this, near-boundary initial
    // samples with transient-dominated costs inflate the frozen normalizer
    // scale and flatten the normalized objective
    for rec in initial.iter_mut() {
        if rec.1 > cost_threshold {
            rec.2 = false;
        }
    }

    let episode_stream = stream_seed(seed, 2);
    let steps: Vec<(u32, DVector<f64>, f64, bool)> = match method {
        Method::BaselineK0 => {
            // frozen initial optimum, re-evaluated on the drifting plant
            let k0 = problem.optimal_gain(0).map_err(|e| e.to_string())?;
            let theta0 = if problem.dim() == 2 {
                DVector::from_vec(vec![k0[2], k0[3]])
            } else {
                k0.clone()
            };
            (1..=cfg.horizon)
                .map(|t| {
                    let (y, stable) = problem
                        .noisy_cost(&theta0, t, episode_seed(episode_stream, t))
                        .unwrap_or((f64::INFINITY, false));
                    (t, theta0.clone(), y, stable)
                })
                .collect()
        }
        _ => {
            let forgetting = if method.uses_ui_forgetting() {
                Forgetting::Ui { sigma_hat_w_sq: cfg.forgetting }
            } else {
                Forgetting::B2p { epsilon: cfg.forgetting }
            };
            let mut acq = AcquisitionConfig::<f64>::for_dim(problem.dim());
            acq.beta = cfg.beta;
            acq.use_constraints = method.constrained();
            acq.trust_region_fraction = cfg.trust_region_fraction;
            acq.n_posterior_samples = cfg.n_posterior_samples;
            acq.fit.max_evals = cfg.fit_max_evals;
            acq.window = if cfg.window == 0 { None } else { Some(cfg.window) };

            let feasible = problem.feasible.clone();
            let mut objective = |theta: &DVector<f64>, t: u32| {
                problem
                    .noisy_cost(theta, t, episode_seed(episode_stream, t))
                    .unwrap_or((f64::INFINITY, false))
            };
            let (_, trajectory) = tvbo_core::optimizer::run(
                &initial,
                &feasible,
                forgetting,
                &acq,
                &mut objective,
                cfg.horizon,
                stream_seed(seed, 3),
            )
            .map_err(|e| e.to_string())?;
            trajectory
                .into_iter()
                .map(|r| (r.t, r.theta_raw, r.y_raw, r.stable))
                .collect()
        }
    };

    let mut rows = Vec::with_capacity(steps.len());
    let mut cum = 0.0f64;
    let mut unstable_count = 0usize;
    for (t, theta, y_raw, stable) in steps {
        let inc = if stable {
            let f_query = problem.noise_free_cost(&theta, t).map_err(|e| e.to_string())?;
            let f_star = problem.oracle_cost(t).map_err(|e| e.to_string())?;
            round12(f_query - f_star)
        } else {
            unstable_count += 1;
            0.0
        };
        cum = round12(cum + inc);
        rows.push(TrajectoryRow {
            t,
            theta: theta.iter().cloned().collect(),
            y_raw,
            stable,
            imputed: !stable,
            regret_inc: inc,
            cum_regret: cum,
        });
    }
    Ok(RunOutcome { method, seed, rows, total_regret: cum, unstable_count })
}

/// Population mean/std.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-method mean/std of total regret and unstable-controller counts.
pub fn summarize(outcomes: &[RunOutcome]) -> Vec<SummaryRow> {
    let mut methods: Vec<Method> = outcomes.iter().map(|o| o.method).collect();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .map(|m| {
            let regrets: Vec<f64> =
                outcomes.iter().filter(|o| o.method == m).map(|o| o.total_regret).collect();
            let unstables: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.method == m)
                .map(|o| o.unstable_count as f64)
                .collect();
            let (rm, rs) = mean_std(&regrets);
            let (um, us) = mean_std(&unstables);
            SummaryRow {
                method: m,
                regret_mean: rm,
                regret_std: rs,
                unstable_mean: um,
                unstable_std: us,
                runs: regrets.len(),
            }
        })
        .collect()
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let dim = rows.first().map_or(0, |r| r.theta.len());
    let mut out = String::from("t");
    for i in 0..dim {
        out.push_str(&format!(",theta_{i}"));
    }
    out.push_str(",y_raw,stable,imputed,regret_inc,cum_regret\n");
    for r in rows {
        out.push_str(&r.t.to_string());
        for v in &r.theta {
            out.push(',');
            out.push_str(&fmt12(*v));
        }
        out.push_str(&format!(
            ",{},{},{},{},{}\n",
            fmt12(r.y_raw),
            u8::from(r.stable),
            u8::from(r.imputed),
            fmt12(r.regret_inc),
            fmt12(r.cum_regret)
        ));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out =
        String::from("method,regret_mean,regret_std,unstable_mean,unstable_std,runs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method.name(),
            fmt12(r.regret_mean),
            fmt12(r.regret_std),
            fmt12(r.unstable_mean),
            fmt12(r.unstable_std),
            r.runs
        ));
    }
    out
}

/// Per-method regret curve: cumulative regret divided by t (running average),
/// one column per run plus the row-wise mean.
pub fn regret_curve_csv(outcomes: &[RunOutcome]) -> String {
    let mut out = String::from(
        "# normalized regret: cumulative regret divided by t (running average)\n",
    );
    out.push('t');
    for o in outcomes {
        out.push_str(&format!(",run_{}", o.seed));
    }
    out.push_str(",mean\n");
    let horizon = outcomes.first().map_or(0, |o| o.rows.len());
    for i in 0..horizon {
        let t = outcomes[0].rows[i].t;
        out.push_str(&t.to_string());
        let mut sum = 0.0;
        for o in outcomes {
            let v = round12(o.rows[i].cum_regret / t as f64);
            sum += v;
            out.push(',');
            out.push_str(&fmt12(v));
        }
        out.push(',');
        out.push_str(&fmt12(round12(sum / outcomes.len() as f64)));
        out.push('\n');
    }
    out
}

/// Everything `run_experiment` produced.
#[derive(Debug)]
pub struct ExperimentReport {
    pub outcomes: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<(Method, u64, String)>,
    pub output_dir: PathBuf,
}

fn run_dir(base: &Path, method: Method, seed: u64) -> PathBuf {
    base.join(format!("{}-seed{}", method.name(), seed))
}

/// Run the full sweep in parallel, write per-run trajectory CSVs with config
/// echoes, per-method regret curves, and the summary CSV. Failed runs are
/// recorded and excluded from the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, String> {
    cfg.validate().map_err(|e| e.to_string())?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| e.to_string())?;

    let pairs: Vec<(Method, u64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<(Method, u64, Result<RunOutcome, String>)> = pairs
        .par_iter()
        .map(|&(m, s)| (m, s, execute_run(cfg, m, s)))
        .collect();

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    let echo = cfg.echo();
    for (m, s, r) in results {
        match r {
            Ok(outcome) => {
                let dir = run_dir(&cfg.output_dir, m, s);
                fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                fs::write(dir.join("trajectory.csv"), trajectory_csv(&outcome.rows))
                    .map_err(|e| e.to_string())?;
                fs::write(dir.join("config.txt"), &echo).map_err(|e| e.to_string())?;
                outcomes.push(outcome);
            }
            Err(e) => {
                eprintln!("warning: run {}-seed{} failed: {e}", m.name(), s);
                failures.push((m, s, e));
            }
        }
    }

    let summary = summarize(&outcomes);
    fs::write(cfg.output_dir.join("summary.csv"), summary_csv(&summary))
        .map_err(|e| e.to_string())?;
    for &m in &cfg.methods {
        let per_method: Vec<RunOutcome> =
            outcomes.iter().filter(|o| o.method == m).cloned().collect();
        if !per_method.is_empty() {
            fs::write(
                cfg.output_dir.join(format!("regret_curve_{}.csv", m.name())),
                regret_curve_csv(&per_method),
            )
            .map_err(|e| e.to_string())?;
        }
    }
    Ok(ExperimentReport { outcomes, summary, failures, output_dir: cfg.output_dir.clone() })
}
