//! Experiment configuration: defaults, flat key-value config files, and
//! `key=value` overrides. Every design default is overridable by key; the
//! fully-resolved config is echoed into each run directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Uncertainty-injection forgetting, unconstrained acquisition.
    Ui,
    /// Back-to-prior forgetting, unconstrained acquisition.
    B2p,
    /// Uncertainty injection with convexity constraints and trust region.
    CUi,
    /// Back-to-prior with convexity constraints and trust region.
    CB2p,
    /// Frozen initial optimal controller, no tuning.
    BaselineK0,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "ui" => Ok(Self::Ui),
            "b2p" => Ok(Self::B2p),
            "c-ui" => Ok(Self::CUi),
            "c-b2p" => Ok(Self::CB2p),
            "baseline-k0" => Ok(Self::BaselineK0),
            other => Err(ConfigError(format!(
                "unknown method '{other}' (expected ui, b2p, c-ui, c-b2p, baseline-k0)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ui => "ui",
            Self::B2p => "b2p",
            Self::CUi => "c-ui",
            Self::CB2p => "c-b2p",
            Self::BaselineK0 => "baseline-k0",
        }
    }

    pub fn constrained(&self) -> bool {
        matches!(self, Self::CUi | Self::CB2p)
    }

    pub fn uses_ui_forgetting(&self) -> bool {
        matches!(self, Self::Ui | Self::CUi)
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully-resolved experiment configuration, every default materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub horizon: u32,
    /// Forgetting factor: sigma_hat_w^2 for UI methods, epsilon for B2P.
    pub forgetting: f64,
    pub beta: f64,
    pub output_dir: PathBuf,
    pub n_initial: usize,
    pub process_noise_std: f64,
    pub norm_bound: f64,
    pub cost_threshold_factor: f64,
    /// Half-width of the feasible box per dimension, as a fraction of the
    /// corresponding initial optimal gain magnitude. 0 keeps the preset box.
    pub box_fraction: f64,
    pub trust_region_fraction: f64,
    pub n_posterior_samples: usize,
    pub fit_max_evals: usize,
    pub window: usize, // 0 = unlimited
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "lqr2d".into(),
            methods: vec![Method::Ui, Method::B2p],
            seeds: (0..25).collect(),
            horizon: 300,
            forgetting: 0.03,
            beta: 2.0,
            output_dir: PathBuf::from("out"),
            n_initial: 30,
            process_noise_std: 1e-3,
            norm_bound: 1e3,
            cost_threshold_factor: 100.0,
            box_fraction: 0.0,
            trust_region_fraction: 0.15,
            n_posterior_samples: 64,
            fit_max_evals: 120,
            window: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError("horizon must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError("seeds must be non-empty".into()));
        }
        if self.methods.is_empty() {
            return Err(ConfigError("methods must be non-empty".into()));
        }
        if self.forgetting <= 0.0 {
            return Err(ConfigError("forgetting must be positive".into()));
        }
        if self.forgetting >= 1.0 {
            return Err(ConfigError("forgetting must be below 1 (B2P epsilon)".into()));
        }
        if self.n_initial < 2 {
            return Err(ConfigError("n_initial must be >= 2".into()));
        }
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |what: &str| ConfigError(format!("invalid {what} value '{value}'"));
        match key {
            "problem" => self.problem = value.to_string(),
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(Method::parse)
                    .collect::<Result<_, _>>()?;
            }
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.trim().parse().map_err(|_| bad("seed")))
                    .collect::<Result<_, _>>()?;
            }
            "horizon" => self.horizon = value.parse().map_err(|_| bad("horizon"))?,
            "forgetting" => self.forgetting = value.parse().map_err(|_| bad("forgetting"))?,
            "beta" => self.beta = value.parse().map_err(|_| bad("beta"))?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "n_initial" => self.n_initial = value.parse().map_err(|_| bad("n_initial"))?,
            "process_noise_std" => {
                self.process_noise_std = value.parse().map_err(|_| bad("process_noise_std"))?
            }
            "norm_bound" => self.norm_bound = value.parse().map_err(|_| bad("norm_bound"))?,
            "cost_threshold_factor" => {
                self.cost_threshold_factor =
                    value.parse().map_err(|_| bad("cost_threshold_factor"))?
            }
            "box_fraction" => {
                self.box_fraction = value.parse().map_err(|_| bad("box_fraction"))?
            }
            "trust_region_fraction" => {
                self.trust_region_fraction =
                    value.parse().map_err(|_| bad("trust_region_fraction"))?
            }
            "n_posterior_samples" => {
                self.n_posterior_samples = value.parse().map_err(|_| bad("n_posterior_samples"))?
            }
            "fit_max_evals" => {
                self.fit_max_evals = value.parse().map_err(|_| bad("fit_max_evals"))?
            }
            "window" => self.window = value.parse().map_err(|_| bad("window"))?,
            other => return Err(ConfigError(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a flat key-value config file. `#` starts a comment; `[section]`
    /// headers are allowed and ignored.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Serialized, fully-resolved form (parseable by [`apply_file`]).
    ///
    /// [`apply_file`]: ExperimentConfig::apply_file
    pub fn echo(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("problem", self.problem.clone());
        kv.insert(
            "methods",
            self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
        );
        kv.insert(
            "seeds",
            self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
        );
        kv.insert("horizon", self.horizon.to_string());
        kv.insert("forgetting", format!("{}", self.forgetting));
        kv.insert("beta", format!("{}", self.beta));
        kv.insert("output_dir", self.output_dir.display().to_string());
        kv.insert("n_initial", self.n_initial.to_string());
        kv.insert("process_noise_std", format!("{}", self.process_noise_std));
        kv.insert("norm_bound", format!("{}", self.norm_bound));
        kv.insert("cost_threshold_factor", format!("{}", self.cost_threshold_factor));
        kv.insert("box_fraction", format!("{}", self.box_fraction));
        kv.insert("trust_region_fraction", format!("{}", self.trust_region_fraction));
        kv.insert("n_posterior_samples", self.n_posterior_samples.to_string());
        kv.insert("fit_max_evals", self.fit_max_evals.to_string());
        kv.insert("window", self.window.to_string());
        let mut out = String::from("[experiment]\n");
        for (k, v) in kv {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
