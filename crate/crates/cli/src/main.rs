use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use tvbo_cli::config::{ExperimentConfig, Method};
use tvbo_cli::runner::run_experiment;

/// Time-varying Bayesian optimization benchmark runner.
#[derive(Parser, Debug)]
#[command(name = "tvbo", version, about)]
struct Cli {
    /// Problem preset: lqr2d, lqr4d, lqr4d-reduced.
    #[arg(long)]
    problem: Option<String>,

    /// Comma-separated methods: ui, b2p, c-ui, c-b2p, baseline-k0.
    #[arg(long)]
    methods: Option<String>,

    /// Comma-separated run seeds.
    #[arg(long)]
    seeds: Option<String>,

    /// Optimization horizon (TVBO steps).
    #[arg(long)]
    horizon: Option<u32>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Flat key-value config file, applied before CLI flags and overrides.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Additional key=value overrides (repeatable), applied last.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        cfg.apply_file(&text).map_err(|e| e.to_string())?;
    }
    if let Some(p) = &cli.problem {
        cfg.problem = p.clone();
    }
    if let Some(m) = &cli.methods {
        cfg.methods = m
            .split(',')
            .filter(|s| !s.is_empty())
            .map(Method::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
    }
    if let Some(s) = &cli.seeds {
        cfg.seeds = s
            .split(',')
            .filter(|x| !x.is_empty())
            .map(|x| x.trim().parse().map_err(|_| format!("bad seed '{x}'")))
            .collect::<Result<_, _>>()?;
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    for ov in &cli.overrides {
        let (k, v) = ov
            .split_once('=')
            .ok_or_else(|| format!("override '{ov}' is not key=value"))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match run_experiment(&cfg) {
        Ok(report) => {
            for row in &report.summary {
                println!(
                    "{:12} regret {:10.3} +/- {:8.3}  unstable {:6.2} +/- {:5.2}  ({} runs)",
                    row.method.name(),
                    row.regret_mean,
                    row.regret_std,
                    row.unstable_mean,
                    row.unstable_std,
                    row.runs
                );
            }
            println!("outputs written to {}", report.output_dir.display());
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} run(s) failed and were excluded", report.failures.len());
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
