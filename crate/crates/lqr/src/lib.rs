//! Time-varying cart-pole LQR benchmark.
//!
//! Linearized cart-pole dynamics whose pole friction increases over a
//! scheduled window, closed-loop episode simulation producing the tuning
//! objective, a discrete Riccati oracle for the true time-varying optimum,
//! instability detection, and regret computation.

pub mod bench;
pub mod cartpole;
pub mod dare;
pub mod discretize;
pub mod episode;
pub mod regret;

pub use bench::{make_initial_dataset, LqrProblem, Preset};
pub use cartpole::{friction, system_matrices, CartPoleParams, FrictionSchedule};
pub use dare::solve_dare;
pub use discretize::discretize;
pub use episode::{is_unstable, simulate_episode, EpisodeConfig, EpisodeResult, ThresholdConfig};
pub use regret::regret;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LqrError {
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tvbo_core::CoreError),
}

pub type Result<T> = std::result::Result<T, LqrError>;
